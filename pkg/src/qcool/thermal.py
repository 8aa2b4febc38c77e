"""Boltzmann occupation of oscillator levels and the thermal <v_x^2>.

Levels are normalized without degeneracy factors, P_N = (1 - e^{-x}) e^{-Nx}
with x = ħω / (k_B T); each level's probability is then split evenly over
its f(N) states, with the extra 1/2 from |1 + i|^2, giving the weight
|C|^2 e^{-6kt/m} = P_N / (2 f(N)).
"""
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from qcool.states import CONVENTION_WEIGHT, degeneracy, shell_vx2_weight

SMALL_X = 1e-8
PARTIAL_MAX_TERMS = 100_000
TAIL_CUTOFF = 1e-18


class ConditioningWarning(RuntimeWarning):
    """Closed-form series evaluated where its denominator ~ x^2 loses accuracy."""


def _check_x(x):
    if not (x > 0) or math.isnan(x):
        raise ValueError(f"x = ħω/(k_B T) must be positive, got {x!r}")


def one_minus_exp(x):
    """1 - e^{-x} without cancellation at small x."""
    return 1.0 if math.isinf(x) else -math.expm1(-x)


def level_probability(x, N):
    _check_x(x)
    if N < 0:
        raise ValueError("N must be >= 0")
    if N == 0:
        return one_minus_exp(x)
    return one_minus_exp(x) * math.exp(-N * x)


def state_weight(x, mode):
    """|C|^2 e^{-6kt/m} for one state of shell N: e^{-Nx}(1 - e^{-x}) / (2 f(N))."""
    return level_probability(x, mode.N) / (CONVENTION_WEIGHT * degeneracy(mode.N))


def state_weight_coefficient(mode):
    """Exact rational prefactor of e^{-Nx}(1 - e^{-x}) in :func:`state_weight`."""
    return Fraction(1, CONVENTION_WEIGHT * degeneracy(mode.N))


def shell_cutoff(x):
    """Smallest N with e^{-Nx} < 1e-18, capped at 1e5."""
    _check_x(x)
    return min(int(math.floor(-math.log(TAIL_CUTOFF) / x)) + 1, PARTIAL_MAX_TERMS)


def _s0_closed(x):
    if x < SMALL_X:
        warnings.warn(f"closed-form S0 is ill-conditioned at x={x:g}", ConditioningWarning, stacklevel=3)
    if math.isinf(x):
        return 0.0
    d = one_minus_exp(x)
    return (5.0 * math.exp(-x) - 3.0 * math.exp(-2.0 * x)) / (d * d)


def _s0_partial(x):
    terms = []
    acc = 0.0
    for N in range(1, PARTIAL_MAX_TERMS + 1):
        term = (2 * N + 3) * math.exp(-N * x)
        terms.append(term)
        acc += term
        if term < 1e-16 * acc or term == 0.0:
            break
    return math.fsum(terms)


def series_S0(x, method="closed"):
    """S0 = sum_{N>=1} (2N + 3) e^{-Nx}, closed form or partial sums."""
    _check_x(x)
    if method == "closed":
        return _s0_closed(x)
    if method == "partial":
        return _s0_partial(x)
    raise ValueError(f"method must be 'closed' or 'partial', got {method!r}")


def series_S(x, method="closed"):
    return series_S0(x, method) / 6.0


def vx2_factor(x, method="closed"):
    """(m / ħω) <v_x^2> = (1 - e^{-x}) (1/2 + S).

    The closed form collapses to 1/2 + 1/(3 (e^x - 1)), which is evaluated
    directly: it stays monotone in floating point where the product form
    rounds back and forth around 1/2.
    """
    if method == "closed":
        _check_x(x)
        if x < SMALL_X:
            warnings.warn(f"closed-form S0 is ill-conditioned at x={x:g}", ConditioningWarning, stacklevel=2)
        return 0.5 if math.isinf(x) else 0.5 + 1.0 / (3.0 * math.expm1(x))
    return one_minus_exp(x) * (0.5 + series_S(x, method))


def thermal_vx2(params, x, method="closed"):
    return params.hbar * params.omega / params.mass * vx2_factor(x, method)


def thermal_vx2_shell_sum(params, x, n_cut=None):
    """Direct level-by-level sum of (ħω/m) (2 n_x + 1) |C|^2 over complete shells."""
    _check_x(x)
    if n_cut is None:
        n_cut = shell_cutoff(x)
    p = one_minus_exp(x)
    terms = [shell_vx2_weight(N) / (CONVENTION_WEIGHT * degeneracy(N)) * p * math.exp(-N * x) for N in range(n_cut + 1)]
    return params.hbar * params.omega / params.mass * math.fsum(terms)


@dataclass(frozen=True)
class ThermalEnsemble:
    x: float
    n_cut: int
    probabilities: np.ndarray
    weights: np.ndarray

    @classmethod
    def at(cls, x, n_cut=None):
        _check_x(x)
        if n_cut is None:
            n_cut = shell_cutoff(x)
        probs = np.array([level_probability(x, N) for N in range(n_cut + 1)])
        deg = np.array([degeneracy(N) for N in range(n_cut + 1)], dtype=float)
        return cls(float(x), int(n_cut), probs, probs / (CONVENTION_WEIGHT * deg))

    @classmethod
    def from_temperature(cls, params, T, n_cut=None):
        if not (T > 0):
            raise ValueError("temperature must be positive")
        return cls.at(params.hbar * params.omega / (params.k_B * T), n_cut)

    def total_probability(self):
        return math.fsum(self.probabilities)

    def weight(self, mode):
        if mode.N > self.n_cut:
            return 0.0
        return float(self.weights[mode.N])
