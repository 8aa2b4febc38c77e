"""Cooling temperature from ½ m <v_x^2> = ½ k_B T.

In x = ħω/(k_B T) the condition is y1(x) = 1/x with
y1(x) = (1 - e^{-x})(1/2 + S(x)). The root x* involves no ω at all, so
T = ħω / (k_B x*) is exactly linear in ω.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from qcool.thermal import vx2_factor

BRACKET = (0.05, 50.0)
SCAN_POINTS = 200
DEFAULT_TOL = 1e-12


class SolverError(RuntimeError):
    pass


class BracketError(SolverError):
    """g has no sign change on the bracket."""


class SignScanAnomaly(SolverError):
    """g changes sign more than once on the bracket."""


def lhs_y1(x):
    return vx2_factor(x)


def rhs_y2(x):
    """k_B T / ħω expressed in x."""
    return 1.0 / x


def g(x):
    return lhs_y1(x) - 1.0 / x


@dataclass(frozen=True)
class RootResult:
    x: float
    iterations: int
    residual: float


def _sign_scan(lo, hi, points):
    xs = np.geomspace(lo, hi, points)
    vals = np.array([g(x) for x in xs])
    sign = np.sign(vals)
    changes = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    exact = np.nonzero(vals == 0)[0]
    if len(exact):
        return float(xs[exact[0]]), float(xs[exact[0]]), len(changes) + len(exact)
    if len(changes) == 0:
        raise BracketError(f"g(x) = y1(x) - 1/x has no sign change on [{lo}, {hi}]")
    if len(changes) > 1:
        raise SignScanAnomaly(f"g(x) changes sign {len(changes)} times on [{lo}, {hi}]")
    i = changes[0]
    return float(xs[i]), float(xs[i + 1]), 1


def solve_x_star(tolerance=DEFAULT_TOL, bracket=BRACKET, scan_points=SCAN_POINTS, max_iter=200):
    """Bisection root of y1(x) = 1/x after a sign scan of the bracket."""
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    lo, hi = bracket
    if not (0 < lo < hi):
        raise ValueError("bracket must satisfy 0 < lo < hi")
    a, b, _ = _sign_scan(lo, hi, scan_points)
    if a == b:
        return RootResult(float(a), 0, 0.0)
    ga = g(a)
    it = 0
    while b - a > tolerance * 0.5 * (a + b):
        if it >= max_iter:
            raise SolverError(f"bisection did not reach tolerance {tolerance} in {max_iter} steps")
        mid = 0.5 * (a + b)
        gm = g(mid)
        it += 1
        if gm == 0.0:
            a = b = mid
            break
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
    x = 0.5 * (a + b)
    return RootResult(x, it, abs(g(x)))


@dataclass(frozen=True)
class CoolingSolution:
    omega: float
    x_root: float
    T: float
    iterations: int
    residual: float


def solve_temperature(params, tolerance=DEFAULT_TOL):
    root = solve_x_star(tolerance)
    T = params.hbar * params.omega / (params.k_B * root.x)
    return CoolingSolution(params.omega, root.x, T, root.iterations, root.residual)


@dataclass(frozen=True)
class SweepTable:
    rows: tuple
    slope: float
    intercept: float
    fit_residual: float
    through_origin: bool

    @property
    def omegas(self):
        return np.array([r.omega for r in self.rows])

    @property
    def temperatures(self):
        return np.array([r.T for r in self.rows])

    @property
    def x_roots(self):
        return np.array([r.x_root for r in self.rows])

    @property
    def slope_uK_per_kHz(self):
        # T[µK] = 1e6 a ω[s^-1] = 1e9 a ω[kHz]
        return self.slope * 1e9


def fit_line(omegas, temps, through_origin=True):
    """Least-squares T = a ω + b; ``through_origin`` fixes b = 0."""
    w = np.asarray(omegas, dtype=float)
    T = np.asarray(temps, dtype=float)
    if through_origin:
        a = float(np.dot(w, T) / np.dot(w, w))
        b = 0.0
    elif len(w) < 2:
        raise ValueError("an unconstrained fit needs at least two points")
    else:
        a, b = (float(v) for v in np.polyfit(w, T, 1))
    resid = float(np.max(np.abs(T - (a * w + b))))
    return a, b, resid


def sweep(params, omegas, *, through_origin=True, tolerance=DEFAULT_TOL, workers=None):
    """Solve at every ω and fit the T-ω line; rows come back sorted by ω."""
    omegas = [float(w) for w in omegas]
    if not omegas:
        raise ValueError("omega list must be non-empty")
    if any(not (w > 0) for w in omegas):
        raise ValueError("all omega values must be positive")
    jobs = [replace(params, omega=w) for w in sorted(omegas)]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda p: solve_temperature(p, tolerance), jobs))
    else:
        rows = [solve_temperature(p, tolerance) for p in jobs]
    a, b, resid = fit_line([r.omega for r in rows], [r.T for r in rows], through_origin)
    return SweepTable(tuple(rows), a, b, resid, through_origin)


@dataclass(frozen=True)
class FigureCurves:
    omega: float
    T: np.ndarray
    y1: np.ndarray
    y2: np.ndarray

    def crossings(self):
        """(T_lo, T_hi) pairs bracketing each sign change of y1 - y2."""
        d = self.y1 - self.y2
        idx = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0)[0]
        return [(float(self.T[i]), float(self.T[i + 1])) for i in idx]


def curves_for_figure(params, T_min, T_max, count):
    """y1 and y2 = k_B T/ħω tabulated on a uniform temperature grid."""
    if not (0 < T_min < T_max):
        raise ValueError("temperature range must satisfy 0 < T_min < T_max")
    if count < 2:
        raise ValueError("need at least two sample points")
    T = np.linspace(T_min, T_max, int(count))
    x = params.hbar * params.omega / (params.k_B * T)
    y1 = np.array([lhs_y1(v) for v in x])
    y2 = params.k_B * T / (params.hbar * params.omega)
    return FigureCurves(params.omega, T, y1, y2)

