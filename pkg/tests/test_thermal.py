import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcool.expectation import diagonal_v2_sum
from qcool.states import Mode3, PhysParams, degeneracy, enumerate_shell
from qcool.thermal import (
    ConditioningWarning,
    ThermalEnsemble,
    level_probability,
    one_minus_exp,
    series_S0,
    shell_cutoff,
    state_weight,
    state_weight_coefficient,
    thermal_vx2,
    thermal_vx2_shell_sum,
    vx2_factor,
)

NAT = PhysParams.natural()
XS = np.geomspace(0.05, 40, 100)


def test_level_probability_examples():
    assert level_probability(1.0, 0) == pytest.approx(0.6321206, abs=1e-7)
    assert level_probability(math.inf, 0) == 1.0
    assert level_probability(800.0, 0) == 1.0
    total = math.fsum(level_probability(1.0, N) for N in range(51))
    assert abs(total - 1) <= math.exp(-51)


def test_small_argument_path():
    assert one_minus_exp(1e-12) == pytest.approx(1e-12, rel=1e-11)
    assert level_probability(1e-12, 0) > 0


@pytest.mark.parametrize("x", [0.0, -1.0, math.nan])
def test_rejects_nonpositive_x(x):
    with pytest.raises(ValueError):
        level_probability(x, 0)
    with pytest.raises(ValueError):
        series_S0(x)


@pytest.mark.parametrize("x", [0.2, 1.0, 4.0])
def test_state_weight_examples(x):
    assert state_weight(x, Mode3(0, 0, 0)) == pytest.approx(one_minus_exp(x) / 2, rel=1e-15)
    assert state_weight(x, Mode3(1, 0, 0)) == pytest.approx(math.exp(-x) * one_minus_exp(x) / 6, rel=1e-15)
    assert state_weight(x, Mode3(1, 1, 2)) == pytest.approx(math.exp(-4 * x) * one_minus_exp(x) / 30, rel=1e-14)


def test_state_weight_110_at_one():
    # (1/12) e^{-2} (1 - e^{-1}) evaluates to 0.0071290
    v = state_weight(1.0, Mode3(1, 1, 0))
    assert v == pytest.approx(math.exp(-2) * (1 - math.exp(-1)) / 12, rel=1e-15)
    assert v == pytest.approx(0.0071290, abs=5e-8)


@pytest.mark.parametrize("mode, frac", [((0, 0, 0), "1/2"), ((1, 0, 0), "1/6"), ((2, 0, 0), "1/12"), ((2, 1, 0), "1/20"), ((1, 1, 2), "1/30")])
def test_weight_rationals(mode, frac):
    assert state_weight_coefficient(Mode3(*mode)) == Fraction(frac)


@pytest.mark.parametrize("x", [0.3, 1.0, 3.0])
def test_weight_consistency(x):
    n_cut = 40
    weights = math.fsum(2 * state_weight(x, m) for N in range(n_cut + 1) for m in enumerate_shell(N))
    probs = math.fsum(level_probability(x, N) for N in range(n_cut + 1))
    assert weights == pytest.approx(probs, rel=1e-13)
    assert probs >= 1 - math.exp(-(n_cut + 1) * x) - 1e-15


def test_coefficient_table_exact():
    # grouped per shell and stripped of e^{-Nx}(1-e^{-x}), the diagonal v_x^2 sum
    # is (2 f(N)) * sum (2n_x+1) / (2 f(N)); reproducing the bracket coefficients
    # requires undoing the per-state rational weight
    got = []
    for N in range(5):
        shell = enumerate_shell(N)
        w = {m: state_weight_coefficient(m) for m in shell}
        per_shell = diagonal_v2_sum(w, 0)
        assert isinstance(per_shell, Fraction)
        got.append(per_shell * 2 * degeneracy(N))
    assert got == [1, 5, 14, 30, 55]
    assert [diagonal_v2_sum({m: state_weight_coefficient(m) for m in enumerate_shell(N)}) for N in range(5)] == [
        Fraction(1, 2), Fraction(5, 6), Fraction(7, 6), Fraction(9, 6), Fraction(11, 6)
    ]


def test_series_examples():
    assert series_S0(1.0) == pytest.approx(3.587, abs=5e-4)
    assert series_S0(1.0) == pytest.approx(series_S0(1.0, "partial"), rel=1e-12)
    assert series_S0(0.5) == pytest.approx(series_S0(0.5, "partial"), rel=1e-12)
    assert series_S0(40.0) < 1e-16 and series_S0(40.0, "partial") < 1e-16
    assert series_S0(40.0) == pytest.approx(5 * math.exp(-40), rel=1e-15)
    with pytest.raises(ValueError):
        series_S0(1.0, "taylor")


@pytest.mark.parametrize("x", XS)
def test_series_identity(x):
    closed, partial = series_S0(x), series_S0(x, "partial")
    assert abs(closed - partial) < 1e-12 * (1 + closed)


@pytest.mark.parametrize("x", XS[::3])
def test_shell_sum_equivalence(x):
    assert thermal_vx2_shell_sum(NAT, x) == pytest.approx(thermal_vx2(NAT, x), rel=1e-10)


def test_thermal_examples():
    p = PhysParams(1.05e-34, 1.38e-23, 2.2e-25, 1e5)
    scale = p.hbar * p.omega / p.mass
    assert thermal_vx2(p, 700.0) == pytest.approx(0.5 * scale, rel=1e-15)
    assert vx2_factor(1.755481883518975) == pytest.approx(1 / 1.755481883518975, abs=1e-6)
    direct = scale * math.fsum((2 * N + 3) / 6 * one_minus_exp(1.0) * math.exp(-N) for N in range(201))
    assert thermal_vx2(p, 1.0) == pytest.approx(direct, rel=1e-12)
    assert thermal_vx2_shell_sum(p, 1.0, 200) == pytest.approx(direct, rel=1e-12)


def test_monotone_decreasing():
    # above x ~ 36 the excess over 1/2 is below one ulp, so only non-increase is resolvable
    vals = np.array([thermal_vx2(NAT, x) for x in XS])
    resolvable = XS[1:] < 30
    assert np.all(np.diff(vals)[resolvable] < 0)
    assert np.all(np.diff(vals) <= 0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 30), st.floats(1.001, 3))
def test_monotone_pairs(x, ratio):
    if x * ratio < 30:
        assert vx2_factor(x * ratio) < vx2_factor(x)
    else:
        assert vx2_factor(x * ratio) <= vx2_factor(x)


def test_conditioning_warning():
    with pytest.warns(ConditioningWarning):
        series_S0(1e-9)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        series_S0(1e-3)


def test_cutoff():
    x = 2.0
    n = shell_cutoff(x)
    assert math.exp(-n * x) < 1e-18 <= math.exp(-(n - 1) * x)
    assert shell_cutoff(1e-9) == 100_000


class TestEnsemble:
    def test_from_temperature(self):
        p = PhysParams(1.05e-34, 1.38e-23, 2.2e-25, 1e5)
        ens = ThermalEnsemble.from_temperature(p, 0.433425e-6)
        assert ens.x == pytest.approx(1.7555, rel=1e-4)
        assert ens.total_probability() == pytest.approx(1.0, abs=1e-15)

    def test_weights(self):
        ens = ThermalEnsemble.at(1.0, n_cut=10)
        assert ens.weight(Mode3(1, 1, 0)) == pytest.approx(state_weight(1.0, Mode3(1, 1, 0)), rel=1e-15)
        assert ens.weight(Mode3(11, 0, 0)) == 0.0

    def test_rejects_bad_temperature(self):
        with pytest.raises(ValueError):
            ThermalEnsemble.from_temperature(NAT, -1.0)


@pytest.mark.parametrize("x", XS)
def test_collapsed_form_matches_product(x):
    product = one_minus_exp(x) * (0.5 + series_S0(x) / 6)
    assert vx2_factor(x) == pytest.approx(product, rel=1e-15)
    assert vx2_factor(x, "partial") == pytest.approx(product, rel=1e-12)
