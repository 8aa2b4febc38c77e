"""Velocity moments <v_d> and <v_d^2> of damped oscillator states.

All values follow the (1+i) amplitude convention without renormalizing:
a pure mode with coefficient 1 gives <v_x^2> = (ħω/m)(2 n_x + 1).
Sums are contractions of the ladder tables in :mod:`qcool.oscillator`;
nothing is hard-coded to vanish.
"""
import cmath
import math
from dataclasses import dataclass

import numpy as np

from qcool.oscillator import ladder_derivative, second_derivative_action
from qcool.states import CONVENTION_WEIGHT, Mode3, Superposition

REAL_TOL = 1e-12


@dataclass(frozen=True)
class VelocityMoments:
    mean_v: tuple
    mean_v2: tuple
    t: float


def _check_state(state, n_max=None):
    state.check_cutoff(state.n_max if n_max is None else n_max)


def _contract(state, axis, action, omega, t):
    """sum_n sum_(j, c) C*_{n with n_axis=j} C_n c exp(-i (n_axis - j) omega t); also sum of |terms|."""
    total = 0j
    size = 0.0
    for mode, c in state.items():
        n = mode[axis]
        for target, coef in action(n):
            partner = state.get(mode.shifted(axis, target - n))
            if partner == 0:
                continue
            term = coef * c * partner.conjugate() * cmath.exp(-1j * (n - target) * omega * t)
            total += term
            size += abs(term)
    return total, size


def _as_real(value, size, what):
    if abs(value.imag) > REAL_TOL * max(size, abs(value)):
        raise ArithmeticError(f"{what} has imaginary residue {value.imag!r} (magnitude {abs(value)!r})")
    return value.real


def _v_mean_complex(state, params, t, axis):
    s, size = _contract(state, axis, ladder_derivative, params.omega, t)
    pref = CONVENTION_WEIGHT * params.hbar * params.alpha / params.mass * params.envelope(t) / 1j
    return pref * s, abs(pref) * size


def _v2_complex(state, params, t, axis):
    s, size = _contract(state, axis, second_derivative_action, params.omega, t)
    pref = -CONVENTION_WEIGHT * params.hbar**2 * params.alpha**2 / params.mass**2 * params.envelope(t)
    return pref * s, abs(pref) * size


def general_v_mean(state, params, t):
    """<v> for a superposition: adjacent-mode cross terms oscillating at omega."""
    _check_state(state)
    out = []
    for axis in range(3):
        val, size = _v_mean_complex(state, params, t, axis)
        out.append(_as_real(val, size, f"<v_{'xyz'[axis]}>"))
    return np.array(out)


def general_v2(state, params, t):
    """<v_d^2>: diagonal (2n_d + 1)|C|^2 terms plus cross terms at 2 omega."""
    _check_state(state)
    out = []
    for axis in range(3):
        val, size = _v2_complex(state, params, t, axis)
        out.append(_as_real(val, size, f"<v_{'xyz'[axis]}^2>"))
    return np.array(out)


def particular_v_mean(params, mode, t):
    if t < 0:
        raise ValueError("t must be >= 0")
    return general_v_mean(Superposition.single(mode, 1.0), params, t)


def particular_v2(params, mode, t):
    """exp(-6kt/m) (ħω/m)(2 n_d + 1) per component, via the ladder contraction."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return general_v2(Superposition.single(mode, 1.0), params, t)


def diagonal_v2_sum(weights, axis=0):
    """sum over modes of (2 n_axis + 1) * weight; exact for Fraction weights."""
    total = 0
    for mode, w in weights.items():
        if not isinstance(mode, Mode3):
            mode = Mode3(*mode)
        total += (2 * mode[axis] + 1) * w
    return total


def period_averaged_v2(state, params, t_envelope):
    """general_v2 averaged over one period with exp(-6kt/m) frozen at ``t_envelope``.

    The cross terms average to zero, leaving (ħω/m) e^{-6k t/m} sum (2n_d+1)|C|^2.
    """
    _check_state(state)
    weights = {mode: abs(c) ** 2 for mode, c in state.items()}
    scale = params.hbar * params.omega / params.mass * params.envelope(t_envelope)
    return np.array([scale * math.fsum((2 * m[a] + 1) * w for m, w in weights.items()) for a in range(3)])


def moments(state, params, t):
    return VelocityMoments(
        tuple(general_v_mean(state, params, t)), tuple(general_v2(state, params, t)), float(t)
    )
