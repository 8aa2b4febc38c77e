"""Command-line front end.

Exit codes: 0 success, 2 bad arguments or input, 3 numerical failure,
4 output I/O failure.

Options may also come from a ``key = value`` file given with ``--config``;
flags on the command line override it. ``$QCOOL_CONSTANTS`` picks the
default constant set.
"""
import argparse
import csv
import io
import math
import os
import re
import sys
import tempfile
from pathlib import Path

import numpy as np

from qcool import coolsolve, expectation, gridlab, svgplot, thermal
from qcool.constants import get_constant_set
from qcool.states import CoefficientFileError, PhysParams, Superposition

EXIT_OK, EXIT_ARGS, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
TEMP_UNITS = {"k": 1.0, "mk": 1e-3, "uk": 1e-6, "µk": 1e-6, "nk": 1e-9}
_QUANTITY = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([a-zA-Zµ]*)\s*$")


class CliError(Exception):
    def __init__(self, message, code=EXIT_ARGS):
        super().__init__(message)
        self.code = code


def _quantity(text, units, default_unit, what):
    m = _QUANTITY.match(str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse {what} {text!r}")
    value, unit = float(m.group(1)), (m.group(2) or default_unit).lower()
    if unit not in units:
        raise argparse.ArgumentTypeError(f"unknown {what} unit {m.group(2)!r}; use one of {sorted(set(units))}")
    value *= units[unit]
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"{what} must be positive, got {text!r}")
    return value


def frequency(text):
    """'100khz' -> 1e5; a bare number is in Hz."""
    return _quantity(text, FREQ_UNITS, "hz", "frequency")


def temperature(text):
    """'0.5uK' -> 5e-7; a bare number is in kelvin."""
    return _quantity(text, TEMP_UNITS, "k", "temperature")


def positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return v


def nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text!r}")
    return v


def count_at_least(minimum):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {v}")
        return v

    return parse


def fmt_csv(v):
    """Scientific notation, 9 significant digits."""
    return f"{v:.8e}"


def read_config(path):
    """``key = value`` lines; ``#`` comments; keys use option names with - or _."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def write_atomic(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_csv(v) for v in row])
    return buf.getvalue()


def _outputs(args):
    """(csv_path, svg_path) per --output/--format; csv None means stdout."""
    fmt = args.format
    if args.output is None:
        if fmt != "csv":
            raise CliError("--format svg/both needs --output")
        return None, None
    base = Path(args.output)
    if base.suffix.lower() in (".csv", ".svg"):
        base = base.with_suffix("")
    csv_path = base.with_suffix(".csv") if fmt in ("csv", "both") else None
    svg_path = base.with_suffix(".svg") if fmt in ("svg", "both") else None
    return csv_path, svg_path


def _emit(args, csv_body, chart, out):
    csv_path, svg_path = _outputs(args)
    try:
        if args.output is None:
            out.write(csv_body)
        if csv_path is not None:
            write_atomic(csv_path, csv_body)
            print(f"wrote {csv_path}", file=out)
        if svg_path is not None:
            write_atomic(svg_path, svgplot.render(chart))
            print(f"wrote {svg_path}", file=out)
    except OSError as exc:
        raise CliError(f"cannot write output: {exc}", EXIT_IO) from exc


def _constants(args):
    try:
        return get_constant_set(args.constants)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _omega(args, value):
    return 2 * math.pi * value if args.angular_2pi else value


def _trap_params(args, omega):
    c = _constants(args)
    return PhysParams(c.hbar, c.k_B, 1.0, omega)


def _dynamics_params(args):
    c = _constants(args) if args.si else None
    hbar = args.hbar if args.hbar is not None else (c.hbar if c else 1.0)
    return PhysParams(hbar, c.k_B if c else 1.0, args.mass, args.omega_value, args.damping)


def _format_T(T):
    uk = T * 1e6
    lines = [f"T = {uk:.6g} µK"]
    if uk > 1000:
        lines.append(f"T = {T * 1e3:.4g} mK")
    return lines


def result_line(**fields):
    parts = []
    for k, v in fields.items():
        if isinstance(v, bool) or isinstance(v, int):
            parts.append(f"{k}={int(v)}")
        elif isinstance(v, float):
            parts.append(f"{k}={v:.9e}")
        else:
            parts.append(f"{k}={v}")
    return "RESULT " + " ".join(parts)


def cmd_solve(args, out):
    omega = _omega(args, args.omega)
    sol = coolsolve.solve_temperature(_trap_params(args, omega), args.tolerance)
    print(f"omega = {omega:.9e} s^-1", file=out)
    print(f"x* = {sol.x_root:.12g}", file=out)
    for line in _format_T(sol.T):
        print(line, file=out)
    print(f"residual = {sol.residual:.3e}", file=out)
    print(f"iterations = {sol.iterations}", file=out)
    print(
        result_line(
            omega_s=float(omega), x_star=float(sol.x_root), T_K=float(sol.T), residual=float(sol.residual),
            iterations=int(sol.iterations),
        ),
        file=out,
    )


def cmd_curves(args, out):
    omega = _omega(args, args.omega)
    if not args.tmin < args.tmax:
        raise CliError("--tmin must be below --tmax")
    params = _trap_params(args, omega)
    curves = coolsolve.curves_for_figure(params, args.tmin, args.tmax, args.points)
    sol = coolsolve.solve_temperature(params)
    body = csv_text(["T_K", "y1", "y2"], zip(curves.T, curves.y1, curves.y2))
    chart = svgplot.Chart(
        f"y1, y2 vs T at omega = {omega:.6g} s^-1",
        "T (µK)",
        "y",
        [
            svgplot.Series("y1", curves.T * 1e6, curves.y1),
            svgplot.Series("y2 = k_B T / (ħω)", curves.T * 1e6, curves.y2, dashed=True),
        ],
        [(sol.T * 1e6, coolsolve.lhs_y1(sol.x_root), f"T = {sol.T * 1e6:.6g} µK")],
    )
    info = out if args.output is not None else sys.stderr
    _emit(args, body, chart, out)
    for lo, hi in curves.crossings():
        print(f"crossing between {lo * 1e6:.6g} µK and {hi * 1e6:.6g} µK", file=info)
    if not curves.crossings():
        print("no crossing inside the range", file=info)
    for line in _format_T(sol.T):
        print(f"solver: {line}", file=info)


def cmd_sweep(args, out):
    if not args.omega_min < args.omega_max:
        raise CliError("--omega-min must be below --omega-max")
    omegas = [_omega(args, w) for w in np.linspace(args.omega_min, args.omega_max, args.count)]
    c = _constants(args)
    table = coolsolve.sweep(
        PhysParams(c.hbar, c.k_B, 1.0, omegas[0]), omegas, through_origin=args.fit == "origin", workers=args.workers
    )
    body = csv_text(["omega_hz", "x_star", "T_K"], zip(table.omegas, table.x_roots, table.temperatures))
    w_k = table.omegas / 1e3
    chart = svgplot.Chart(
        "cooling temperature vs omega",
        "omega (kHz)",
        "T (µK)",
        [
            svgplot.Series("solved T", w_k, table.temperatures * 1e6, points_only=True),
            svgplot.Series(
                f"fit T = {table.slope_uK_per_kHz:.4g} omega", w_k, (table.slope * table.omegas + table.intercept) * 1e6
            ),
        ],
    )
    info = out if args.output is not None else sys.stderr
    _emit(args, body, chart, out)
    spread = float(np.ptp(table.x_roots) / np.mean(table.x_roots))
    print(f"slope = {table.slope_uK_per_kHz:.6e} µK/kHz ({table.slope:.6e} K s)", file=info)
    print(f"intercept = {table.intercept:.3e} K", file=info)
    print(f"fit residual = {table.fit_residual:.3e} K", file=info)
    print(f"x* relative spread = {spread:.3e}", file=info)
    print(
        result_line(
            slope_uK_per_kHz=float(table.slope_uK_per_kHz), slope_K_s=float(table.slope),
            intercept_K=float(table.intercept), fit_residual_K=float(table.fit_residual), x_spread=spread,
        ),
        file=info,
    )


def _load_state(path, params, out):
    try:
        coeffs = Superposition.from_file(path, damping=params.damping, mass=params.mass)
    except CoefficientFileError as exc:
        raise CliError(f"malformed coefficient file: {exc}") from exc
    except OSError as exc:
        raise CliError(f"cannot read coefficient file: {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if len(coeffs) == 0:
        raise CliError(f"{path}: no coefficients")
    norm = coeffs.weighted_norm()
    if abs(norm - 1.0) > 1e-9:
        print(f"warning: 2 sum |C|^2 = {norm:.12g} != 1; rescaling coefficients", file=sys.stderr)
        coeffs = coeffs.normalized()
    return coeffs


def cmd_expect(args, out):
    params = _dynamics_params(args)
    state = _load_state(args.coefficients, params, out)
    t = args.time
    v = expectation.general_v_mean(state, params, t)
    v2 = expectation.general_v2(state, params, t)
    avg = expectation.period_averaged_v2(state, params, t)
    print(f"state: {len(state)} modes, 2 sum |C|^2 = {state.weighted_norm():.12g}", file=out)
    print(f"t = {t:.9g}", file=out)
    print("<v>     = ({:.9e}, {:.9e}, {:.9e})".format(*v), file=out)
    print("<v^2>   = ({:.9e}, {:.9e}, {:.9e})".format(*v2), file=out)
    print("<<v^2>> = ({:.9e}, {:.9e}, {:.9e})  (period average, envelope at t)".format(*avg), file=out)
    fields = dict(t=float(t))
    for name, vec in (("v", v), ("v2", v2), ("v2avg", avg)):
        for axis, val in zip("xyz", vec):
            fields[f"{name}_{axis}"] = float(val)
    if args.grid_check:
        grid = gridlab.grid_vx2_for_state(state, params, t)
        rel = abs(grid - v2[0]) / abs(v2[0])
        print(f"grid <v_x^2> = {grid:.9e}  relative difference {rel:.3e}", file=out)
        fields["grid_v2_x"] = float(grid)
        fields["grid_rel_diff"] = float(rel)
    print(result_line(**fields), file=out)


def cmd_evolve(args, out):
    params = _dynamics_params(args)
    try:
        spec = gridlab.GridSpec.for_params(params, args.points, args.lengths, args.steps_per_period, args.periods)
        spec.validate(params)
        if args.coeffs:
            state3 = _load_state(args.coeffs, params, out)
            if any(m.n_y or m.n_z for m in state3.modes):
                raise CliError("evolve runs in 1D: coefficient file may only contain n_y = n_z = 0")
            init = gridlab.superposition_data(spec, params, {m.n_x: c for m, c in state3.items()})
        elif args.coherent is not None:
            init = gridlab.coherent_data(spec, params, args.coherent / params.alpha)
        else:
            init = gridlab.eigenstate_data(spec, params, args.eigen)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    try:
        traj = gridlab.evolve(init, spec, params, record_every=args.record_every)
    except gridlab.GridInstabilityError as exc:
        raise CliError(f"instability: {exc}", EXIT_NUMERIC) from exc
    body = csv_text(
        ["t", "norm2", "v2_raw", "v2_normalized"], zip(traj.t, traj.norm2, traj.v2_raw, traj.v2_normalized)
    )
    chart = svgplot.Chart(
        "grid evolution",
        "t",
        "<v_x^2>",
        [
            svgplot.Series("v2_raw", traj.t, traj.v2_raw),
            svgplot.Series("v2_normalized", traj.t, traj.v2_normalized, dashed=True),
        ],
    )
    info = out if args.output is not None else sys.stderr
    _emit(args, body, chart, out)
    rate = traj.decay_exponent()
    expected = 6 * params.damping / params.mass
    err = abs(rate - expected) / expected if expected else abs(rate)
    label = "relative error" if expected else "absolute error"
    print(f"norm^2 decay exponent = {rate:.12e} (6k/m = {expected:.12e}, {label} {err:.3e})", file=info)
    print(result_line(decay_exponent=float(rate), expected=float(expected), error=float(err)), file=info)


def cmd_thermal(args, out):
    if args.x is not None:
        x = args.x
    elif args.temperature is not None and args.omega is not None:
        c = _constants(args)
        x = c.hbar * _omega(args, args.omega) / (c.k_B * args.temperature)
    else:
        raise CliError("give --x, or both --temperature and --omega")
    s0c = thermal.series_S0(x, "closed")
    s0p = thermal.series_S0(x, "partial")
    factor = thermal.vx2_factor(x)
    print(f"x = {x:.12g}", file=out)
    print(f"S0 closed = {s0c:.15e}", file=out)
    print(f"S0 partial = {s0p:.15e}", file=out)
    print(f"S = {s0c / 6:.15e}", file=out)
    print(f"<v_x^2> / (ħω/m) = {factor:.15e}", file=out)
    print(f"1/x = {1 / x:.15e}", file=out)
    print(result_line(x=float(x), S0=float(s0c), S0_partial=float(s0p), S=float(s0c / 6), vx2_factor=float(factor)),
          file=out)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file of option defaults")
    common.add_argument("--constants", choices=["truncated", "codata"], default=None,
                        help="constant set (default: $QCOOL_CONSTANTS or truncated)")
    common.add_argument("--angular-2pi", action="store_true",
                        help="multiply frequencies by 2π before use (default: use as given)")

    dyn = argparse.ArgumentParser(add_help=False)
    dyn.add_argument("--mass", type=positive_float, default=1.0)
    dyn.add_argument("--omega", dest="omega_value", type=frequency, default=1.0, help="trap rate (bare number: s^-1)")
    dyn.add_argument("--hbar", type=positive_float, default=None)
    dyn.add_argument("--damping", type=nonneg_float, default=0.0, help="damping coefficient k")
    dyn.add_argument("--si", action="store_true", help="take ħ/k_B from the constant set (default: natural units)")

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("-o", "--output", help="output base path (.csv/.svg appended)")
    out.add_argument("--format", choices=["csv", "svg", "both"], default="csv")

    p = argparse.ArgumentParser(prog="qcool", description=__doc__.split("\n", 1)[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="cooling temperature at one frequency")
    s.add_argument("--omega", type=frequency, required=True, help="e.g. 100khz, 6.175ghz")
    s.add_argument("--tolerance", type=positive_float, default=coolsolve.DEFAULT_TOL)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("curves", parents=[common, out], help="y1 and y2 against T")
    s.add_argument("--omega", type=frequency, required=True)
    s.add_argument("--tmin", type=temperature, required=True, help="e.g. 0.05uK")
    s.add_argument("--tmax", type=temperature, required=True)
    s.add_argument("--points", type=count_at_least(2), default=200)
    s.set_defaults(func=cmd_curves)

    s = sub.add_parser("sweep", parents=[common, out], help="T over a frequency range with linear fit")
    s.add_argument("--omega-min", type=frequency, required=True)
    s.add_argument("--omega-max", type=frequency, required=True)
    s.add_argument("--count", type=count_at_least(2), default=9)
    s.add_argument("--fit", choices=["origin", "free"], default="origin")
    s.add_argument("--workers", type=count_at_least(1), default=None)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("expect", parents=[common, dyn], help="velocity moments of a coefficient file")
    s.add_argument("coefficients", help="file of 'n_x n_y n_z re im' lines")
    s.add_argument("--time", type=nonneg_float, default=0.0)
    s.add_argument("--grid-check", action="store_true", help="cross-check <v_x^2> against a 1D grid run")
    s.set_defaults(func=cmd_expect)

    s = sub.add_parser("evolve", parents=[common, dyn, out], help="1D grid integration")
    s.add_argument("--points", type=count_at_least(64), default=1024)
    s.add_argument("--lengths", type=positive_float, default=10.0, help="half-width in oscillator lengths")
    s.add_argument("--steps-per-period", type=count_at_least(63), default=4096)
    s.add_argument("--periods", type=positive_float, default=1.0)
    s.add_argument("--record-every", type=count_at_least(1), default=16)
    init = s.add_mutually_exclusive_group()
    init.add_argument("--eigen", type=count_at_least(0), default=0, help="start in (1+i) psi_n")
    init.add_argument("--coherent", type=float, default=None, help="displaced ground state, in oscillator lengths")
    init.add_argument("--coeffs", help="coefficient file with n_y = n_z = 0")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("thermal", parents=[common], help="series S0, S and the <v_x^2> factor")
    s.add_argument("--x", type=positive_float, default=None, help="ħω / (k_B T)")
    s.add_argument("--temperature", type=temperature, default=None)
    s.add_argument("--omega", type=frequency, default=None)
    s.set_defaults(func=cmd_thermal)
    return p


_TRUE, _FALSE = {"1", "true", "yes", "on"}, {"0", "false", "no", "off"}


def _apply_config(subparser, values, path):
    """Install config values as defaults; string defaults still go through ``type``."""
    defaults = {}
    for action in subparser._actions:
        if action.dest not in values:
            continue
        value = values[action.dest]
        if isinstance(action, argparse._StoreTrueAction):
            flag = value.lower()
            if flag not in _TRUE | _FALSE:
                raise CliError(f"{path}: {action.dest} must be true or false, got {value!r}")
            value = flag in _TRUE
        action.required = False
        defaults[action.dest] = value
    subparser.set_defaults(**defaults)


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        values = read_config(known.config)
        for action in parser._subparsers._group_actions:
            for subparser in action.choices.values():
                _apply_config(subparser, values, known.config)
    return parser.parse_args(argv)


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        args.func(args, out)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ARGS
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except coolsolve.SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
