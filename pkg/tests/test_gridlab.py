import math

import numpy as np
import pytest
import scipy.linalg

from qcool import gridlab
from qcool.expectation import general_v2
from qcool.gridlab import (
    GridEdgeError,
    GridInstabilityError,
    GridSpec,
    coherent_data,
    eigenstate_data,
    evolve,
    hamiltonian_bands,
    make_state,
    measure_v2,
    norm2,
    superposition_data,
)
from qcool.oscillator import eigenfunction
from qcool.states import PhysParams, Superposition

NAT = PhysParams.natural()
DAMPED = PhysParams.natural(damping=0.1)  # k/m = 0.1


def dense_h(spec, params):
    d, o1, o2 = hamiltonian_bands(spec, params)
    return np.diag(d) + np.diag(o1, 1) + np.diag(o1, -1) + np.diag(o2, 2) + np.diag(o2, -2)


@pytest.fixture(scope="module")
def coarse():
    return GridSpec.for_params(NAT, points=256, steps_per_period=512)


def test_ground_state_fidelity(coarse):
    s0 = eigenstate_data(coarse, NAT, 0)
    traj = evolve(s0, coarse, NAT, keep_states=True, record_every=coarse.steps)
    psi0, psi1 = traj.snapshots[0], traj.snapshots[-1]
    fid = abs(np.vdot(psi0, psi1)) ** 2 / (np.vdot(psi0, psi0).real * np.vdot(psi1, psi1).real)
    assert fid > 1 - 1e-8


def test_norm_decay_exact(coarse):
    s0 = eigenstate_data(coarse, DAMPED, 0)
    traj = evolve(s0, coarse, DAMPED, record_every=32)
    np.testing.assert_allclose(traj.norm2 / traj.norm2[0], np.exp(-0.6 * traj.t), rtol=1e-12)
    assert traj.decay_exponent() == pytest.approx(0.6, abs=1e-10)


def test_damping_factorization(coarse):
    s_free = eigenstate_data(coarse, NAT, 0)
    data = superposition_data(coarse, NAT, {0: 0.6, 1: 0.8j})
    free = evolve(data, coarse, NAT, record_every=64, keep_states=True)
    damped = evolve(make_state(data.psi, coarse, DAMPED), coarse, DAMPED, record_every=64, keep_states=True)
    for t, a, b in zip(free.t, free.snapshots, damped.snapshots):
        np.testing.assert_allclose(b, a * math.exp(-0.3 * t), rtol=0, atol=1e-12 * np.max(np.abs(a)))
    np.testing.assert_allclose(damped.v2_normalized, free.v2_normalized, rtol=1e-12)
    assert s_free.t == 0.0


def test_measure_v2_examples():
    spec = GridSpec.for_params(NAT, points=1024, steps_per_period=1024)
    s = eigenstate_data(spec, NAT, 0)
    assert measure_v2(s, spec, NAT) == pytest.approx(1.0, abs=1e-6)
    v, flag = measure_v2(s, spec, NAT, return_flag=True)
    assert not flag
    traj = evolve(eigenstate_data(spec, DAMPED, 0), spec, DAMPED, record_every=128)
    np.testing.assert_allclose(traj.v2_raw, np.exp(-0.6 * traj.t), rtol=0, atol=1e-6)


def test_under_resolution_flag():
    spec = GridSpec(10.0, 64, 0.01, 1)
    s = eigenstate_data(spec, NAT, 12, prefactor=1.0)
    _, flag = measure_v2(s, spec, NAT, return_flag=True)
    assert flag


def test_superposition_matches_analytic():
    spec = GridSpec.for_params(NAT, points=1024, steps_per_period=4096, periods=0.25)
    data = superposition_data(spec, NAT, {0: 2**-0.5, 2: 2**-0.5})
    traj = evolve(data, spec, NAT, record_every=128)
    state = Superposition({(0, 0, 0): 2**-0.5, (2, 0, 0): 2**-0.5})
    want = np.array([general_v2(state, NAT, t)[0] for t in traj.t])
    np.testing.assert_allclose(traj.v2_raw, want, rtol=0, atol=1e-5)


def test_coherent_state_ehrenfest():
    spec = GridSpec.for_params(NAT, points=1024, steps_per_period=4096)
    s = coherent_data(spec, NAT, 1.5)
    traj = evolve(s, spec, NAT, record_every=64)
    np.testing.assert_allclose(traj.x_mean, 1.5 * np.cos(traj.t), rtol=0, atol=1e-4)


def _phase_error(steps_per_period):
    spec = GridSpec.for_params(NAT, points=256, steps_per_period=steps_per_period)
    data = superposition_data(spec, NAT, {0: 0.6, 1: 0.8})
    traj = evolve(data, spec, NAT, record_every=spec.steps, keep_states=True)
    exact = scipy.linalg.expm(-1j * dense_h(spec, NAT) * (spec.dt * spec.steps)) @ data.psi
    return np.max(np.abs(traj.snapshots[-1] - exact))


def test_time_convergence_second_order():
    ratio = _phase_error(256) / _phase_error(512)
    assert 3.5 < ratio < 4.5


def _grid_residual(points):
    spec = GridSpec(10.0, points, 0.01, 1)
    psi = eigenfunction(NAT.osc1d(), 0, spec.x)
    return np.max(np.abs(dense_h(spec, NAT) @ psi - 0.5 * psi))


def test_spatial_convergence():
    assert _grid_residual(255) / _grid_residual(511) >= 4


def test_validation():
    with pytest.raises(ValueError):
        GridSpec(10.0, 32, 0.01, 1)
    with pytest.raises(ValueError):
        GridSpec(5.0, 256, 0.01, 1).validate(NAT)
    with pytest.raises(ValueError):
        GridSpec(10.0, 256, 0.2, 1).validate(NAT)
    with pytest.raises(ValueError):
        gridlab.GridPropagator(GridSpec(10.0, 256, 0.2, 1), NAT)


def test_edge_guard(coarse):
    with pytest.raises(GridEdgeError):
        coherent_data(coarse, NAT, 8.0)
    with pytest.raises(ValueError):
        make_state(np.full(coarse.points, np.nan), coarse, NAT)


def test_instability_detected(coarse, monkeypatch):
    prop = gridlab.GridPropagator(coarse, NAT)
    inner = prop._stepper
    monkeypatch.setattr(prop, "_stepper", lambda psi: 1.001 * inner(psi))
    with pytest.raises(GridInstabilityError):
        prop.step(eigenstate_data(coarse, NAT, 0))


def test_backends_agree(coarse, backend):
    data = superposition_data(coarse, DAMPED, {0: 0.6, 3: 0.8j})
    ref = evolve(data, coarse, DAMPED, backend="python", keep_states=True, record_every=coarse.steps)
    got = evolve(data, coarse, DAMPED, backend=backend, keep_states=True, record_every=coarse.steps)
    np.testing.assert_allclose(got.snapshots[-1], ref.snapshots[-1], rtol=0, atol=1e-11)


def test_norm2_of_unit_state(coarse):
    assert norm2(eigenstate_data(coarse, NAT, 0, prefactor=1.0), coarse) == pytest.approx(1.0, rel=1e-10)


def test_grid_vx2_for_state():
    state = Superposition({(0, 0, 0): 0.6, (2, 0, 0): 0.48, (1, 1, 0): 0.64j})
    got = gridlab.grid_vx2_for_state(state, NAT, 0.3)
    assert got == pytest.approx(general_v2(state, NAT, 0.3)[0], abs=1e-5)
