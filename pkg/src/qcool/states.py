"""3D product states of the damped oscillator.

Every basis function carries the fixed amplitude factor (1 + i), so a pure
mode with coefficient 1 has squared norm 2. Amplitudes decay as
``exp(-3 k t / m)`` on top of the usual ``exp(-i E1 t / hbar)`` phase.
"""
import cmath
import itertools
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np

from qcool.constants import TRUNCATED
from qcool.oscillator import N_MAX_DEFAULT, OscParams1D, eigenfunction_table

CONVENTION = 1 + 1j
CONVENTION_WEIGHT = 2  # |1 + i|^2, kept an exact int


@dataclass(frozen=True)
class PhysParams:
    """Constants plus atom/trap parameters; trap stiffness is ``kappa = m omega**2``."""

    hbar: float
    k_B: float
    mass: float
    omega: float
    damping: float = 0.0

    def __post_init__(self):
        for name in ("hbar", "k_B", "mass", "omega"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not (self.damping >= 0 and math.isfinite(self.damping)):
            raise ValueError(f"damping must be non-negative and finite, got {self.damping!r}")

    @classmethod
    def natural(cls, damping=0.0, **kw):
        """ħ = m = ω = k_B = 1."""
        base = dict(hbar=1.0, k_B=1.0, mass=1.0, omega=1.0, damping=damping)
        base.update(kw)
        return cls(**base)

    @classmethod
    def from_constants(cls, constants=TRUNCATED, *, mass=1.0, omega=1.0, damping=0.0):
        return cls(constants.hbar, constants.k_B, mass, omega, damping)

    @property
    def kappa(self):
        return self.mass * self.omega**2

    @property
    def alpha(self):
        return math.sqrt(self.mass * self.omega / self.hbar)

    @property
    def decay_rate(self):
        """Amplitude decay rate 3k/m (s^-1); quadratic observables decay at twice this."""
        return 3.0 * self.damping / self.mass

    def envelope(self, t):
        """exp(-6 k t / m), the decay of every quadratic observable."""
        return math.exp(-2.0 * self.decay_rate * t)

    def osc1d(self):
        return OscParams1D(self.mass, self.omega, self.hbar)


@dataclass(frozen=True, order=True)
class Mode3:
    n_x: int
    n_y: int
    n_z: int

    def __post_init__(self):
        for v in (self.n_x, self.n_y, self.n_z):
            if int(v) != v or v < 0:
                raise ValueError(f"quantum numbers must be non-negative integers, got {self.as_tuple()}")

    @property
    def N(self):
        return self.n_x + self.n_y + self.n_z

    def as_tuple(self):
        return (self.n_x, self.n_y, self.n_z)

    def __getitem__(self, axis):
        return self.as_tuple()[axis]

    def shifted(self, axis, delta):
        """Neighbouring mode along ``axis``, or None if it would be negative."""
        q = list(self.as_tuple())
        q[axis] += delta
        return Mode3(*q) if q[axis] >= 0 else None


@dataclass(frozen=True)
class ComplexEnergy:
    real: float
    imag: float

    @property
    def value(self):
        return complex(self.real, self.imag)


def complex_energy(params, mode):
    """E = (N + 3/2) ħω - i 3ħk/m."""
    return ComplexEnergy((mode.N + 1.5) * params.hbar * params.omega, -params.hbar * params.decay_rate)


def degeneracy(N):
    if N < 0:
        raise ValueError("shell number must be >= 0")
    return (N + 1) * (N + 2) // 2


def enumerate_shell(N):
    """All modes with n_x + n_y + n_z = N, lexicographic (n_x major)."""
    if N < 0:
        raise ValueError("shell number must be >= 0")
    return [Mode3(a, b, N - a - b) for a in range(N + 1) for b in range(N - a + 1)]


def shell_vx2_weight(N):
    """Sum of (2 n_x + 1) over shell N.

    Grouped by n_x: each n_x occurs once per (n_y, n_z) split of the rest.
    """
    if N < 0:
        raise ValueError("shell number must be >= 0")
    return sum((2 * a + 1) * (N - a + 1) for a in range(N + 1))


def shell_vx2_weight_closed(N):
    return (N + 1) * (N + 2) * (2 * N + 3) // 6


def particular_solution_value(params, mode, r, t):
    """(1+i) psi_nx(x) psi_ny(y) psi_nz(z) exp(-i E1 t / hbar) exp(-3kt/m)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    osc = params.osc1d()
    r = np.asarray(r, dtype=np.float64)
    amp = 1.0
    for axis in range(3):
        table, _ = eigenfunction_table(osc, mode[axis], r[..., axis])
        amp = amp * table[mode[axis]]
    e1 = complex_energy(params, mode).real
    phase = cmath.exp(-1j * e1 * t / params.hbar)
    return CONVENTION * amp * phase * math.exp(-params.decay_rate * t)


@dataclass(frozen=True)
class Superposition:
    """Sparse coefficients C over Mode3, each multiplying (1+i) psi_mode."""

    coefficients: "MappingProxyType[Mode3, complex]"
    damping: float = 0.0
    mass: float = 1.0
    n_max: int = N_MAX_DEFAULT

    def __init__(self, coefficients, damping=0.0, mass=1.0, n_max=N_MAX_DEFAULT):
        coeffs = {}
        for mode, c in dict(coefficients).items():
            if not isinstance(mode, Mode3):
                mode = Mode3(*mode)
            if max(mode.as_tuple()) > n_max:
                raise ValueError(f"mode {mode.as_tuple()} exceeds basis cutoff {n_max}")
            coeffs[mode] = coeffs.get(mode, 0) + complex(c)
        object.__setattr__(self, "coefficients", MappingProxyType(dict(sorted(coeffs.items()))))
        object.__setattr__(self, "damping", float(damping))
        object.__setattr__(self, "mass", float(mass))
        object.__setattr__(self, "n_max", int(n_max))

    @classmethod
    def single(cls, mode, coefficient=1.0, **kw):
        return cls({mode: coefficient}, **kw)

    @classmethod
    def from_file(cls, path, **kw):
        return cls(read_coefficient_file(path), **kw)

    def __len__(self):
        return len(self.coefficients)

    def items(self):
        return self.coefficients.items()

    def get(self, mode):
        return self.coefficients.get(mode, 0j) if mode is not None else 0j

    @property
    def modes(self):
        return list(self.coefficients)

    def weighted_norm(self):
        """2 * sum |C|^2, which is 1 for a weight-normalized state."""
        return CONVENTION_WEIGHT * math.fsum(abs(c) ** 2 for c in self.coefficients.values())

    def normalized(self):
        s = math.sqrt(self.weighted_norm())
        if s == 0:
            raise ValueError("cannot normalize an empty state")
        return Superposition({m: c / s for m, c in self.items()}, self.damping, self.mass, self.n_max)

    def check_cutoff(self, n_max):
        for mode in self.coefficients:
            if max(mode.as_tuple()) > n_max:
                raise ValueError(f"mode {mode.as_tuple()} exceeds basis cutoff {n_max}")


def squared_norm(state, t):
    """2 (sum |C|^2) exp(-6 k t / m)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return state.weighted_norm() * math.exp(-6.0 * state.damping * t / state.mass)


class CoefficientFileError(ValueError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


_INT = re.compile(r"^[+-]?\d+$")


def parse_coefficients(text, source="<string>"):
    """Parse ``n_x n_y n_z re im`` lines; ``#`` starts a comment."""
    coeffs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise CoefficientFileError(source, lineno, f"expected 5 fields, got {len(fields)}")
        if not all(_INT.match(f) for f in fields[:3]):
            raise CoefficientFileError(source, lineno, "quantum numbers must be integers")
        nums = [int(f) for f in fields[:3]]
        if min(nums) < 0:
            raise CoefficientFileError(source, lineno, "quantum numbers must be non-negative")
        try:
            re_c, im_c = float(fields[3]), float(fields[4])
        except ValueError:
            raise CoefficientFileError(source, lineno, "coefficient parts must be real numbers") from None
        if not (math.isfinite(re_c) and math.isfinite(im_c)):
            raise CoefficientFileError(source, lineno, "coefficient must be finite")
        mode = Mode3(*nums)
        coeffs[mode] = coeffs.get(mode, 0j) + complex(re_c, im_c)
    return coeffs


def read_coefficient_file(path):
    path = Path(path)
    return parse_coefficients(path.read_text(encoding="utf-8"), str(path))


def format_coefficients(state):
    lines = ["# n_x n_y n_z re(C) im(C)"]
    for mode, c in state.items():
        lines.append(f"{mode.n_x} {mode.n_y} {mode.n_z} {c.real:.17g} {c.imag:.17g}")
    return "\n".join(lines) + "\n"


@dataclass
class EigenResidualReport:
    mode: Mode3
    spacing: float
    residual_real: float
    residual_imag: float
    coupling: float
    under_resolved: bool
    residual_half_spacing: float = field(default=float("nan"))

    @property
    def max_residual(self):
        return max(self.residual_real, self.residual_imag)


def _fd_second_derivative(f, h):
    """4th-order central second derivative, zero beyond the grid ends."""
    g = np.pad(f, 2)
    return (-g[4:] + 16 * g[3:-1] - 30 * g[2:-2] + 16 * g[1:-3] - g[:-4]) / (12 * h * h)


def _residual_at(params, mode, points_per_length, half_width):
    osc = params.osc1d()
    length = osc.length
    h = length / points_per_length
    n_side = int(round(half_width * points_per_length))
    x = np.arange(-n_side, n_side + 1) * h
    factors, second = [], []
    for axis in range(3):
        table, _ = eigenfunction_table(osc, mode[axis], x)
        f = table[mode[axis]]
        factors.append(f)
        second.append(_fd_second_derivative(f, h))
    e = complex_energy(params, mode)
    coupling = e.imag + params.hbar * params.decay_rate
    kin = -params.hbar**2 / (2 * params.mass)
    fx, fy, fz = factors
    sx, sy, sz = second
    pot_y = 0.5 * params.kappa * x**2
    scale = abs(e.real) * float(np.max(np.abs(fx)) * np.max(np.abs(fy)) * np.max(np.abs(fz)))
    # stencil rows touching the zero padding are excluded
    core = slice(2, len(x) - 2)
    fx, sx, xc = fx[core], sx[core], x[core]
    fy, fz, sy, sz, pot_y = fy[core], fz[core], sy[core], sz[core], pot_y[core]
    # row i of the residual is a[i] * yz + fx[i] * (B -/+ coupling * yz); splitting
    # off the exact 1D energy gives a tight per-row bound, so tail rows are skipped
    yz = np.outer(fy, fz)
    b = kin * (np.outer(sy, fz) + np.outer(fy, sz)) + (pot_y[:, None] + pot_y[None, :] - e.real) * yz
    a = kin * sx + 0.5 * params.kappa * xc * xc * fx
    b_r, b_i = b + coupling * yz, b - coupling * yz
    e_x = params.hbar * params.omega * (mode.n_x + 0.5)
    d = np.abs(a - e_x * fx)
    c_max = max(float(np.max(np.abs(e_x * yz + b_r))), float(np.max(np.abs(e_x * yz + b_i))))
    bound = np.abs(fx) * c_max + d * float(np.max(np.abs(yz)))
    worst_r = worst_i = 0.0
    for i in np.argsort(-bound):
        if bound[i] <= max(worst_r, worst_i):
            break
        worst_r = max(worst_r, float(np.max(np.abs(a[i] * yz + fx[i] * b_r))))
        worst_i = max(worst_i, float(np.max(np.abs(a[i] * yz + fx[i] * b_i))))
    return h, worst_r / scale, worst_i / scale, coupling


def eigen_residuals(params, mode, points_per_length=32, half_width=8.0):
    """Residuals of the real and imaginary separated equations on a 3D grid.

    Both are relative to ``max |E1 R|``. The grid is re-run at half spacing;
    a change in residual above 0.1 (10% of the reference scale) flags the
    grid as under-resolved.
    """
    if points_per_length < 16:
        raise ValueError("grid must resolve the state with >= 16 points per oscillator length")
    h, rr, ri, coupling = _residual_at(params, mode, points_per_length, half_width)
    _, rr2, ri2, _ = _residual_at(params, mode, 2 * points_per_length, half_width)
    fine = max(rr2, ri2)
    under = abs(max(rr, ri) - fine) > 0.1
    return EigenResidualReport(mode, h, rr, ri, coupling, under, fine)
