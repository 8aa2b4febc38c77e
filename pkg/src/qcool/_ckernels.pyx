# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Hermite-function recurrence and banded Crank-Nicolson step."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, log, sqrt, M_PI

cnp.import_array()

cdef double _RESCALE = 1e100


def hermite_table(xi, nmax, window):
    """Normalized Hermite functions phi_0..phi_nmax at dimensionless points xi."""
    cdef double[::1] z = np.ascontiguousarray(xi, dtype=np.float64)
    cdef Py_ssize_t npts = z.shape[0]
    cdef int nm = nmax
    cdef double win = window
    table_arr = np.zeros((nm + 1, npts))
    under_arr = np.zeros(npts, dtype=np.bool_)
    cdef double[:, ::1] table = table_arr
    cdef cnp.npy_bool[::1] under = under_arr
    cdef double log_rescale = log(_RESCALE)
    cdef double p0 = M_PI ** -0.25
    cdef Py_ssize_t j
    cdef int n
    cdef double x, half_sq, p, p_prev, p_next, logscale
    for j in range(npts):
        x = z[j]
        if fabs(x) > win:
            under[j] = True
            continue
        half_sq = -0.5 * x * x
        p_prev = 0.0
        p = p0
        logscale = 0.0
        table[0, j] = p * exp(half_sq)
        for n in range(nm):
            p_next = x * sqrt(2.0 / (n + 1)) * p - sqrt(n / (n + 1.0)) * p_prev
            p_prev = p
            p = p_next
            if fabs(p) > _RESCALE:
                p /= _RESCALE
                p_prev /= _RESCALE
                logscale += log_rescale
            table[n + 1, j] = p * exp(logscale + half_sq)
    return table_arr, under_arr


cdef class CNStepper:
    """One Crank-Nicolson step ``psi <- damp * (I + i beta H)^-1 (I - i beta H) psi``.

    The left matrix is factored once (banded LU without pivoting; its
    Hermitian part is the identity, so elimination is stable).
    """
    cdef public Py_ssize_t n
    cdef public double damp
    cdef double complex[:, ::1] band   # LU factors, band[i, j - i + 2]
    cdef double complex[::1] rd, r1, r2
    cdef double complex[::1] work
    cdef double complex[::1] inv_diag

    def __init__(self, h_diag, h_off1, h_off2, double beta, double damp):
        cdef double[::1] hd = np.ascontiguousarray(h_diag, dtype=np.float64)
        cdef double[::1] h1 = np.ascontiguousarray(h_off1, dtype=np.float64)
        cdef double[::1] h2 = np.ascontiguousarray(h_off2, dtype=np.float64)
        cdef Py_ssize_t n = hd.shape[0]
        cdef Py_ssize_t i, k, j, jmax, imax
        cdef double complex ib = 1j * beta
        cdef double complex l
        self.n = n
        self.damp = damp
        self.band = np.zeros((n, 5), dtype=np.complex128)
        self.rd = np.empty(n, dtype=np.complex128)
        self.r1 = np.zeros(n, dtype=np.complex128)
        self.r2 = np.zeros(n, dtype=np.complex128)
        self.work = np.empty(n, dtype=np.complex128)
        for i in range(n):
            self.band[i, 2] = 1.0 + ib * hd[i]
            self.rd[i] = 1.0 - ib * hd[i]
            if i + 1 < n:
                self.band[i, 3] = ib * h1[i]
                self.band[i + 1, 1] = ib * h1[i]
                self.r1[i] = -ib * h1[i]
            if i + 2 < n:
                self.band[i, 4] = ib * h2[i]
                self.band[i + 2, 0] = ib * h2[i]
                self.r2[i] = -ib * h2[i]
        for k in range(n):
            imax = k + 2 if k + 2 < n else n - 1
            for i in range(k + 1, imax + 1):
                l = self.band[i, k - i + 2] / self.band[k, 2]
                self.band[i, k - i + 2] = l
                jmax = k + 2 if k + 2 < n else n - 1
                for j in range(k + 1, jmax + 1):
                    self.band[i, j - i + 2] -= l * self.band[k, j - k + 2]
        self.inv_diag = np.empty(n, dtype=np.complex128)
        for i in range(n):
            self.inv_diag[i] = 1.0 / self.band[i, 2]

    def apply_rhs(self, psi):
        cdef double complex[::1] p = np.ascontiguousarray(psi, dtype=np.complex128)
        out = np.empty(self.n, dtype=np.complex128)
        cdef double complex[::1] o = out
        self._rhs(p, o)
        return out

    cdef void _rhs(self, double complex[::1] p, double complex[::1] o) noexcept nogil:
        cdef Py_ssize_t n = self.n
        cdef Py_ssize_t i
        cdef double complex[::1] rd = self.rd
        cdef double complex[::1] r1 = self.r1
        cdef double complex[::1] r2 = self.r2
        if n < 5:
            for i in range(n):
                o[i] = rd[i] * p[i]
                if i + 1 < n:
                    o[i] = o[i] + r1[i] * p[i + 1]
                if i >= 1:
                    o[i] = o[i] + r1[i - 1] * p[i - 1]
                if i + 2 < n:
                    o[i] = o[i] + r2[i] * p[i + 2]
                if i >= 2:
                    o[i] = o[i] + r2[i - 2] * p[i - 2]
            return
        o[0] = rd[0] * p[0] + r1[0] * p[1] + r2[0] * p[2]
        o[1] = rd[1] * p[1] + r1[1] * p[2] + r1[0] * p[0] + r2[1] * p[3]
        for i in range(2, n - 2):
            o[i] = rd[i] * p[i] + r1[i] * p[i + 1] + r1[i - 1] * p[i - 1] + r2[i] * p[i + 2] + r2[i - 2] * p[i - 2]
        i = n - 2
        o[i] = rd[i] * p[i] + r1[i] * p[i + 1] + r1[i - 1] * p[i - 1] + r2[i - 2] * p[i - 2]
        i = n - 1
        o[i] = rd[i] * p[i] + r1[i - 1] * p[i - 1] + r2[i - 2] * p[i - 2]

    def __call__(self, psi):
        cdef double complex[::1] p = np.ascontiguousarray(psi, dtype=np.complex128)
        out = np.empty(self.n, dtype=np.complex128)
        cdef double complex[::1] x = out
        cdef double complex[::1] y = self.work
        cdef double complex[:, ::1] band = self.band
        cdef double complex[::1] inv = self.inv_diag
        cdef Py_ssize_t n = self.n
        cdef Py_ssize_t i
        cdef double complex acc
        cdef double damp = self.damp
        with nogil:
            self._rhs(p, y)
            if n > 1:
                y[1] = y[1] - band[1, 1] * y[0]
            for i in range(2, n):
                y[i] = y[i] - band[i, 1] * y[i - 1] - band[i, 0] * y[i - 2]
            x[n - 1] = y[n - 1] * inv[n - 1]
            if n > 1:
                x[n - 2] = (y[n - 2] - band[n - 2, 3] * x[n - 1]) * inv[n - 2]
            for i in range(n - 3, -1, -1):
                x[i] = (y[i] - band[i, 3] * x[i + 1] - band[i, 4] * x[i + 2]) * inv[i]
            if damp != 1.0:
                for i in range(n):
                    x[i] = x[i] * damp
        return out
