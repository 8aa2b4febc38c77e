import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import brentq

from qcool import coolsolve
from qcool.constants import CODATA, TRUNCATED
from qcool.coolsolve import (
    BracketError,
    SignScanAnomaly,
    curves_for_figure,
    fit_line,
    g,
    lhs_y1,
    rhs_y2,
    solve_temperature,
    solve_x_star,
    sweep,
)
from qcool.states import PhysParams
from qcool.thermal import thermal_vx2

X_STAR = 1.755481883518975


def truncated_params(omega=1e5):
    return PhysParams(TRUNCATED.hbar, TRUNCATED.k_B, 1.0, omega)


def test_root_against_brentq():
    ref = brentq(lambda x: lhs_y1(x) - 1 / x, 0.5, 5.0, xtol=1e-15, rtol=1e-15)
    root = solve_x_star(1e-12)
    assert root.x == pytest.approx(ref, rel=1e-11)
    assert root.x == pytest.approx(X_STAR, rel=1e-11)
    assert root.residual < 1e-12
    assert lhs_y1(root.x) == pytest.approx(1 / root.x, rel=1e-12)
    assert lhs_y1(root.x) == pytest.approx(0.56964, abs=1e-5)


def test_sign_of_g():
    assert g(0.1) < 0
    assert g(50.0) > 0
    assert lhs_y1(700.0) == 0.5
    assert rhs_y2(2.0) == 0.5


def test_y1_is_thermal_factor():
    p = PhysParams(1.05e-34, 1.38e-23, 3e-26, 2e5)
    assert lhs_y1(1.0) == pytest.approx(thermal_vx2(p, 1.0) * p.mass / (p.hbar * p.omega), rel=1e-15)


def test_single_sign_change_dense_scan():
    xs = np.linspace(0.05, 50, 10_000)
    s = np.sign([g(x) for x in xs])
    assert np.count_nonzero(s[:-1] != s[1:]) == 1


def test_tolerance_controls_iterations():
    loose, tight = solve_x_star(1e-4), solve_x_star(1e-12)
    assert loose.iterations < tight.iterations
    assert abs(loose.x - tight.x) < 1e-4 * tight.x


@pytest.mark.parametrize(
    "omega, T",
    [(1e5, 0.433425e-6), (5e5, 2.167125e-6), (9e5, 3.90082e-6)],
)
def test_golden_temperatures(omega, T):
    sol = solve_temperature(truncated_params(omega))
    assert sol.T == pytest.approx(T, rel=1e-4)
    assert sol.T == pytest.approx(TRUNCATED.hbar * omega / (TRUNCATED.k_B * sol.x_root), rel=1e-15)


def test_extrapolation_ghz():
    assert solve_temperature(truncated_params(6.175e9)).T == pytest.approx(26.76e-3, rel=1e-3)


def test_sweep_slope():
    table = sweep(truncated_params(), [k * 1e5 for k in range(1, 10)])
    assert table.slope_uK_per_kHz == pytest.approx(4.334e-3, rel=1e-3)
    assert table.fit_residual < 1e-6 * table.temperatures.max()
    free = sweep(truncated_params(), [k * 1e5 for k in range(1, 10)], through_origin=False)
    assert abs(free.intercept) < 1e-6 * free.temperatures.max()
    xs = table.x_roots
    assert np.all(np.abs(xs - xs[0]) <= 1e-10 * xs[0])
    assert np.all(np.diff(table.temperatures) > 0)


def test_sweep_sorts_and_parallel_matches():
    omegas = [9e5, 1e5, 4e5, 2e5]
    serial = sweep(truncated_params(), omegas)
    par = sweep(truncated_params(), omegas, workers=4)
    assert list(serial.omegas) == sorted(omegas)
    assert serial == par


def test_single_point_sweep_is_ratio():
    t = sweep(truncated_params(), [3e5])
    assert t.slope == t.rows[0].T / 3e5


def test_omega_invariance():
    tol = 1e-12
    omegas = np.geomspace(1e3, 1e10, 20)
    rows = [solve_temperature(truncated_params(w), tol) for w in omegas]
    xs = np.array([r.x_root for r in rows])
    assert np.all(np.abs(xs - xs[0]) <= 10 * tol * xs[0])
    ratios = np.array([r.T / r.omega for r in rows])
    assert np.all(np.abs(ratios - ratios[0]) <= 10 * tol * ratios[0])


def test_codata_shift_small():
    a = solve_temperature(truncated_params()).T
    b = solve_temperature(PhysParams(CODATA.hbar, CODATA.k_B, 1.0, 1e5)).T
    assert abs(b / a - 1) < 5e-3


@pytest.mark.parametrize("omega, lo, hi, T", [(1e5, 0.05e-6, 1e-6, 0.433425e-6), (9e5, 1e-6, 6e-6, 3.90082e-6)])
def test_curves_bracket(omega, lo, hi, T):
    c = curves_for_figure(truncated_params(omega), lo, hi, 400)
    brackets = c.crossings()
    assert len(brackets) == 1
    a, b = brackets[0]
    assert a <= T <= b
    slope = np.diff(c.y2) / np.diff(c.T)
    np.testing.assert_allclose(slope, TRUNCATED.k_B / (TRUNCATED.hbar * omega), rtol=1e-9)


def test_errors():
    with pytest.raises(BracketError):
        solve_x_star(bracket=(5.0, 50.0))
    with pytest.raises(ValueError):
        solve_x_star(tolerance=0)
    with pytest.raises(ValueError):
        sweep(truncated_params(), [])
    with pytest.raises(ValueError):
        sweep(truncated_params(), [1e5, -1.0])
    with pytest.raises(ValueError):
        curves_for_figure(truncated_params(), 1.0, 0.5, 10)
    with pytest.raises(ValueError):
        fit_line([1.0], [2.0], through_origin=False)


def test_anomaly_is_distinct(monkeypatch):
    monkeypatch.setattr(coolsolve, "g", lambda x: math.sin(x))
    with pytest.raises(SignScanAnomaly):
        solve_x_star()
    assert not issubclass(SignScanAnomaly, BracketError)


def test_fast():
    t0 = time.perf_counter()
    for w in (1e5, 5e5, 9e5):
        solve_temperature(truncated_params(w))
    assert time.perf_counter() - t0 < 1.0
