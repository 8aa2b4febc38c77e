"""1D grid integration of the damped wave equation.

The Hermitian part -ħ²/2m d²/dx² + ½ m ω² x² is discretized with a
4th-order five-point Laplacian on Dirichlet interior points and stepped
with Crank-Nicolson. The anti-Hermitian term -iħ 3k/m is a multiple of the
identity, so it is applied exactly as the factor e^{-3kΔt/m} per step.
"""
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from qcool import kernels
from qcool.oscillator import eigenfunction_table
from qcool.states import CONVENTION

EDGE_TOL = 1e-8
DRIFT_TOL = 1e-6
UNDER_RESOLVED = 0.10


class GridInstabilityError(RuntimeError):
    pass


class GridEdgeError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Half-width L (m), interior point count M, time step dt (s), step count."""

    half_width: float
    points: int
    dt: float
    steps: int

    def __post_init__(self):
        if self.points < 64:
            raise ValueError("grid needs at least 64 points")
        if not (self.half_width > 0 and self.dt > 0):
            raise ValueError("half_width and dt must be positive")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")

    @classmethod
    def for_params(cls, params, points=1024, lengths=10.0, steps_per_period=4096, periods=1.0):
        period = 2 * math.pi / params.omega
        return cls(
            lengths / params.alpha, int(points), period / steps_per_period, int(round(periods * steps_per_period))
        )

    @property
    def spacing(self):
        return 2 * self.half_width / (self.points + 1)

    @property
    def x(self):
        return -self.half_width + self.spacing * np.arange(1, self.points + 1)

    def validate(self, params):
        if self.half_width * params.alpha < 8:
            raise ValueError(f"half-width is {self.half_width * params.alpha:.3g} oscillator lengths; need >= 8")
        if self.dt * params.omega >= 0.1:
            raise ValueError(f"dt * omega = {self.dt * params.omega:.3g}; need < 0.1")


@dataclass(frozen=True)
class GridState:
    psi: np.ndarray
    t: float = 0.0
    # norm^2 e^{+6kt/m} at t = 0, for drift detection
    reference_norm2: float = field(default=float("nan"))


def _d2(psi, h, order=4):
    g = np.pad(psi, 2)
    if order == 2:
        return (g[3:-1] - 2 * g[2:-2] + g[1:-3]) / (h * h)
    return (-g[4:] + 16 * g[3:-1] - 30 * g[2:-2] + 16 * g[1:-3] - g[:-4]) / (12 * h * h)


def hamiltonian_bands(spec, params):
    """Main, first and second diagonals of the discrete Hermitian Hamiltonian."""
    h = spec.spacing
    kin = -params.hbar**2 / (2 * params.mass) / (12 * h * h)
    x = spec.x
    diag = kin * -30.0 + 0.5 * params.kappa * x**2
    off1 = np.full(spec.points - 1, kin * 16.0)
    off2 = np.full(spec.points - 2, kin * -1.0)
    return diag, off1, off2


def norm2(state, spec):
    return float(np.sum(np.abs(state.psi) ** 2) * spec.spacing)


def check_edges(psi):
    peak = float(np.max(np.abs(psi)))
    edge = max(abs(psi[0]), abs(psi[-1]), abs(psi[1]), abs(psi[-2]))
    if peak == 0 or edge >= EDGE_TOL * peak:
        raise GridEdgeError(f"edge amplitude {edge:.3g} is not negligible against peak {peak:.3g}")


def make_state(psi, spec, params, t=0.0):
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    if psi.shape != (spec.points,) or not np.all(np.isfinite(psi)):
        raise ValueError("amplitudes must be finite with one value per grid point")
    check_edges(psi)
    ref = float(np.sum(np.abs(psi) ** 2) * spec.spacing) * math.exp(6 * params.damping * t / params.mass)
    return GridState(psi, float(t), ref)


def superposition_data(spec, params, coefficients, prefactor=CONVENTION):
    """prefactor * sum_n c_n psi_n(x) for a mapping {n: c_n}."""
    n_top = max(coefficients)
    table, _ = eigenfunction_table(params.osc1d(), n_top, spec.x)
    psi = np.zeros(spec.points, dtype=np.complex128)
    for n, c in coefficients.items():
        psi += complex(c) * table[n]
    return make_state(prefactor * psi, spec, params)


def eigenstate_data(spec, params, n=0, prefactor=CONVENTION):
    return superposition_data(spec, params, {n: 1.0}, prefactor)


def coherent_data(spec, params, displacement, prefactor=CONVENTION):
    """Ground-state Gaussian displaced by ``displacement`` metres."""
    table, _ = eigenfunction_table(params.osc1d(), 0, spec.x - displacement)
    return make_state(prefactor * table[0], spec, params)


class GridPropagator:
    """Crank-Nicolson stepper for one (spec, params) pair, factored once."""

    def __init__(self, spec, params, backend=None):
        spec.validate(params)
        impl = kernels.available_backends()[backend] if backend else kernels
        self.spec = spec
        self.params = params
        self.period = 2 * math.pi / params.omega
        beta = spec.dt / (2 * params.hbar)
        damp = math.exp(-params.decay_rate * spec.dt)
        self._stepper = impl.CNStepper(*hamiltonian_bands(spec, params), beta, damp)

    def step(self, state):
        psi = self._stepper(state.psi)
        t = state.t + self.spec.dt
        self._check_drift(psi, t, state.reference_norm2)
        return GridState(psi, t, state.reference_norm2)

    def _check_drift(self, psi, t, ref):
        if not math.isfinite(ref):
            return
        n2 = float(np.sum(np.abs(psi) ** 2) * self.spec.spacing)
        drift = abs(n2 * math.exp(6 * self.params.damping * t / self.params.mass) / ref - 1.0)
        if not math.isfinite(drift) or drift > DRIFT_TOL * max(1.0, t / self.period):
            raise GridInstabilityError(f"undamped norm drifted by {drift:.3g} at t = {t:.6g} s")


@functools.lru_cache(maxsize=8)
def _propagator(spec, params):
    return GridPropagator(spec, params)


def step(state, spec, params):
    """Advance one dt."""
    return _propagator(spec, params).step(state)


def measure_v2(state, spec, params, *, return_flag=False):
    """-(ħ²/m²) ∫ ψ* ψ'' dx, not divided by the norm.

    The flag is set when the 2nd- and 4th-order Laplacians disagree by more
    than 10%.
    """
    h = spec.spacing
    scale = -(params.hbar**2) / params.mass**2 * h
    v = scale * float(np.real(np.vdot(state.psi, _d2(state.psi, h))))
    if not return_flag:
        return v
    coarse = scale * float(np.real(np.vdot(state.psi, _d2(state.psi, h, order=2))))
    return v, abs(coarse - v) > UNDER_RESOLVED * abs(v)


def measure_x(state, spec):
    """Normalized <x>."""
    w = np.abs(state.psi) ** 2
    return float(np.dot(w, spec.x) / np.sum(w))


@dataclass
class Trajectory:
    t: np.ndarray
    norm2: np.ndarray
    v2_raw: np.ndarray
    x_mean: np.ndarray
    snapshots: list = field(default_factory=list)

    @property
    def v2_normalized(self):
        return self.v2_raw / self.norm2

    def decay_exponent(self):
        """Least-squares rate r in norm2 ~ exp(-r t)."""
        slope = np.polyfit(self.t, np.log(self.norm2), 1)[0]
        return -float(slope)


def evolve(state, spec, params, *, record_every=1, keep_states=False, backend=None):
    """Run ``spec.steps`` steps, sampling every ``record_every`` steps (and t = 0)."""
    prop = GridPropagator(spec, params, backend) if backend else _propagator(spec, params)
    ts, n2, v2, xm, snaps = [], [], [], [], []

    def record(s):
        ts.append(s.t)
        n2.append(norm2(s, spec))
        v2.append(measure_v2(s, spec, params))
        xm.append(measure_x(s, spec))
        if keep_states:
            snaps.append(s.psi.copy())

    record(state)
    for i in range(1, spec.steps + 1):
        state = prop.step(state)
        if i % record_every == 0 or i == spec.steps:
            record(state)
    return Trajectory(np.array(ts), np.array(n2), np.array(v2), np.array(xm), snaps)


def grid_vx2_for_state(state, params, t, spec=None):
    """<v_x^2> of a 3D superposition at time t by evolving 1D grid states.

    Modes sharing (n_y, n_z) form one 1D superposition; different groups
    are orthogonal in y and z, so their contributions add.
    """
    if spec is None:
        steps_per_period = 4096
        dt = 2 * math.pi / params.omega / steps_per_period
        steps = int(round(t / dt))
        dt = t / steps if steps else dt
        spec = GridSpec(10.0 / params.alpha, 1024, dt, steps)
    groups = {}
    for mode, c in state.items():
        groups.setdefault((mode.n_y, mode.n_z), {})[mode.n_x] = c
    total = 0.0
    for coeffs in groups.values():
        s0 = superposition_data(spec, params, coeffs)
        s = s0
        prop = _propagator(spec, params)
        for _ in range(spec.steps):
            s = prop.step(s)
        total += measure_v2(s, spec, params)
    return total
