"""1D harmonic-oscillator basis.

Eigenfunctions come from the normalized three-term recurrence (see
:mod:`qcool.kernels`). Derivative actions are exact ladder formulas,
returned as ``(target_index, coefficient)`` pairs in units of ``alpha``
(first derivative) or ``alpha**2`` (second derivative).

:func:`quadrature_matrix_element` is an independent check of all of the
above: it integrates Hermite series from :mod:`numpy.polynomial.hermite`
with Gauss-Hermite quadrature and never touches the ladder tables.
"""
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite as H

from qcool import kernels

N_MAX_DEFAULT = 64
OPERATORS = ("identity", "d/dx", "d2/dx2", "x", "x2")


class QuadratureNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class OscParams1D:
    """Mass, angular rate and ħ of a 1D oscillator; ``alpha = sqrt(m omega / hbar)``."""

    mass: float
    omega: float
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "omega", "hbar"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")

    @property
    def alpha(self):
        return math.sqrt(self.mass * self.omega / self.hbar)

    @property
    def length(self):
        """Oscillator length 1/alpha."""
        return 1.0 / self.alpha


def _check_index(n, n_max=None):
    if int(n) != n or n < 0:
        raise ValueError(f"basis index must be a non-negative integer, got {n!r}")
    if n_max is not None and n > n_max:
        raise ValueError(f"basis index {n} exceeds cutoff {n_max}")
    return int(n)


def default_window(n):
    """|alpha x| beyond which phi_n is below double-precision range."""
    return math.sqrt(2 * n + 1) + 40.0


def eigenfunction_table(params, n_max, x, window=None):
    """psi_0..psi_{n_max} at positions ``x``; returns ``(table, underflow)``."""
    n_max = _check_index(n_max)
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("positions must be finite")
    if window is None:
        window = default_window(n_max)
    xi = params.alpha * x.ravel()
    table, underflow = kernels.hermite_table(xi, n_max, window)
    table = table * math.sqrt(params.alpha)
    return table.reshape((n_max + 1,) + x.shape), np.asarray(underflow, dtype=bool).reshape(x.shape)


def eigenfunction(params, n, x, *, n_max=N_MAX_DEFAULT, window=None, return_flag=False):
    """Normalized eigenfunction psi_n(x).

    Points with ``|alpha x|`` outside the evaluation window return 0; pass
    ``return_flag=True`` to also get the boolean underflow mask.
    """
    n = _check_index(n, n_max)
    if window is None:
        window = default_window(n)
    table, underflow = eigenfunction_table(params, n, x, window)
    value = table[n]
    if np.ndim(x) == 0:
        value, underflow = float(value), bool(underflow)
    return (value, underflow) if return_flag else value


def ladder_derivative(n):
    """d(psi_n)/dx = alpha [sqrt(n/2) psi_{n-1} - sqrt((n+1)/2) psi_{n+1}]."""
    n = _check_index(n)
    terms = []
    if n > 0:
        terms.append((n - 1, math.sqrt(n / 2)))
    terms.append((n + 1, -math.sqrt((n + 1) / 2)))
    return terms


def second_derivative_action(n):
    """d2(psi_n)/dx2 in units of alpha**2, as up to three (index, coefficient) pairs."""
    n = _check_index(n)
    terms = []
    if n >= 2:
        terms.append((n - 2, 0.5 * math.sqrt(n * (n - 1))))
    terms.append((n, -(2 * n + 1) / 2))
    terms.append((n + 2, 0.5 * math.sqrt((n + 1) * (n + 2))))
    return terms


def ladder_matrix(kind, size, params=None):
    """Dense ``<m|O|n>`` over indices ``0..size-1`` built from the ladder actions.

    Without ``params`` the derivative matrices are in units of alpha**order.
    """
    scale = 1.0
    if kind == "d/dx":
        action = ladder_derivative
        scale = params.alpha if params is not None else 1.0
    elif kind == "d2/dx2":
        action = second_derivative_action
        scale = params.alpha**2 if params is not None else 1.0
    else:
        raise ValueError(f"no ladder action for operator {kind!r}")
    mat = np.zeros((size, size))
    for n in range(size):
        for target, coef in action(n):
            if target < size:
                mat[target, n] = coef * scale
    return mat


def _hermite_basis_coeffs(n):
    """Hermite-series coefficients of the normalized polynomial part of phi_n."""
    c = np.zeros(n + 1)
    c[n] = math.exp(-0.5 * (0.5 * math.log(math.pi) + n * math.log(2.0) + math.lgamma(n + 1)))
    return c


def _operator_poly(kind, n, alpha):
    """Polynomial q with O[p_n(xi) e^{-xi^2/2}] = q(xi) e^{-xi^2/2}, as a Hermite series."""
    p = _hermite_basis_coeffs(n)
    xi = np.array([0.0, 0.5])  # xi = H_1(xi) / 2
    if kind == "identity":
        return p
    if kind == "x":
        return H.hermmul(xi, p) / alpha
    if kind == "x2":
        return H.hermmul(xi, H.hermmul(xi, p)) / alpha**2
    dp = H.hermder(p)
    if kind == "d/dx":
        return alpha * H.hermsub(dp, H.hermmul(xi, p))
    if kind == "d2/dx2":
        ddp = H.hermder(p, 2)
        xi2_minus_1 = H.hermsub(H.hermmul(xi, xi), [1.0])
        q = H.hermadd(H.hermsub(ddp, 2.0 * H.hermmul(xi, dp)), H.hermmul(xi2_minus_1, p))
        return alpha**2 * q
    raise ValueError(f"unknown operator {kind!r}; expected one of {OPERATORS}")


def _gauss_hermite(left, right, order):
    nodes, weights = H.hermgauss(order)
    return float(np.dot(weights, H.hermval(nodes, left) * H.hermval(nodes, right)))


def quadrature_matrix_element(params, m, kind, n, *, order=None, n_max=N_MAX_DEFAULT, tol=1e-10):
    """<psi_m|O|psi_n> by Gauss-Hermite quadrature, doubling the order once to confirm."""
    m = _check_index(m, n_max)
    n = _check_index(n, n_max)
    min_order = m + n + 16
    order = min_order if order is None else int(order)
    if order < min_order:
        raise ValueError(f"quadrature order must be >= m + n + 16 = {min_order}")
    left = _hermite_basis_coeffs(m)
    right = _operator_poly(kind, n, params.alpha)
    coarse = _gauss_hermite(left, right, order)
    fine = _gauss_hermite(left, right, 2 * order)
    if abs(fine - coarse) > tol * max(1.0, abs(fine)):
        raise QuadratureNotConverged(
            f"<{m}|{kind}|{n}>: order {order} gives {coarse!r}, order {2 * order} gives {fine!r}"
        )
    return fine


def quadrature_matrix(params, kind, size, **kw):
    """Dense matrix of :func:`quadrature_matrix_element` over ``0..size-1``."""
    return np.array([[quadrature_matrix_element(params, i, kind, j, **kw) for j in range(size)] for i in range(size)])
