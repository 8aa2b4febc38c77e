"""Pure-Python (numpy/scipy) implementations of the hot kernels.

Same signatures as the compiled ``_ckernels`` module; :mod:`qcool.kernels`
picks one at import time.
"""
import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)
_PI_QUARTER = math.pi ** -0.25


def hermite_table(xi, nmax, window):
    """Normalized Hermite functions phi_0..phi_nmax at dimensionless points xi.

    Returns ``(table, underflow)`` where ``table[n, j] = phi_n(xi[j])`` and
    ``underflow[j]`` marks points outside ``|xi| <= window`` (set to 0).
    """
    xi = np.ascontiguousarray(xi, dtype=np.float64)
    nmax = int(nmax)
    table = np.zeros((nmax + 1, xi.size))
    underflow = np.abs(xi) > window
    inside = ~underflow
    z = xi[inside]
    half_sq = -0.5 * z * z
    # polynomial parts carry an explicit log scale so high n never overflows
    p_prev = np.zeros_like(z)
    p = np.full_like(z, _PI_QUARTER)
    logscale = np.zeros_like(z)
    rows = table[:, inside]
    rows[0] = p * np.exp(half_sq)
    for n in range(nmax):
        p_next = z * math.sqrt(2.0 / (n + 1)) * p - math.sqrt(n / (n + 1)) * p_prev
        p_prev, p = p, p_next
        big = np.abs(p) > _RESCALE
        if big.any():
            p[big] /= _RESCALE
            p_prev[big] /= _RESCALE
            logscale[big] += _LOG_RESCALE
        rows[n + 1] = p * np.exp(logscale + half_sq)
    table[:, inside] = rows
    return table, underflow


class CNStepper:
    """One Crank-Nicolson step ``psi <- damp * (I + i beta H)^-1 (I - i beta H) psi``.

    ``H`` is real symmetric pentadiagonal, given by its main, first and
    second diagonals.
    """

    def __init__(self, h_diag, h_off1, h_off2, beta, damp):
        self.n = len(h_diag)
        self.damp = float(damp)
        ib = 1j * float(beta)
        self._d = 1.0 - ib * np.asarray(h_diag, dtype=np.float64)
        self._o1 = -ib * np.asarray(h_off1, dtype=np.float64)
        self._o2 = -ib * np.asarray(h_off2, dtype=np.float64)
        a = sp.diags(
            [ib * h_off2, ib * h_off1, 1.0 + ib * np.asarray(h_diag), ib * h_off1, ib * h_off2],
            [-2, -1, 0, 1, 2],
            format="csc",
            dtype=np.complex128,
        )
        self._lu = splu(a)

    def apply_rhs(self, psi):
        out = self._d * psi
        out[:-1] += self._o1 * psi[1:]
        out[1:] += self._o1 * psi[:-1]
        out[:-2] += self._o2 * psi[2:]
        out[2:] += self._o2 * psi[:-2]
        return out

    def __call__(self, psi):
        psi = np.asarray(psi, dtype=np.complex128)
        out = self._lu.solve(self.apply_rhs(psi))
        if self.damp != 1.0:
            out *= self.damp
        return out
