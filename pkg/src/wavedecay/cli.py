"""Command-line front end.

Every subcommand writes a machine-readable report (stdout unless
``--output`` is given) and exits 0 only if every asserted bound holds.
Options may also come from a TOML file given with ``--config``; top-level
keys apply to every command, a ``[verify-lemma1]``-style table to one
command, and flags on the command line win over both.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (DEFAULT_SEED, HypothesisError, axis_decay_slope, lemma1_constants, lemma2_constants,
                     lemma2_corrected_C, run_inequality_suite, sample_domain, verify_decay)
from .core import DecayProfile, WeightExponents
from .iteration import IterationConfig, run_iteration
from .kirchhoff import SphereRule, compare, radial_volumetric, sample_spacetime, verify_majorant
from .quadrature import CharGrid, GridSpec, QuadratureError
from .radial import RadialField, solve, source_lemma1, source_lemma2, write_field_rows

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SLOPE_RTOL = 0.05

MODULATIONS = {
    "cos": lambda y: np.cos(y[..., 0]),
    "half-cos": lambda y: 0.5 * (1.0 + np.cos(y[..., 0])),
    "neg": lambda y: -np.ones(y.shape[:-1]),
    "ratio": lambda y: y[..., 0] / (1.0 + np.abs(y[..., 0])),
    "none": None,
}


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def write_atomic(path: Path | None, text: str) -> None:
    """Write via a temp file and rename; ``None`` means stdout."""
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_jsonable, allow_nan=False) + "\n"


def _grid(args) -> CharGrid:
    spec = GridSpec(u_max=args.u_max, per_unit=args.per_unit, uniform_until=args.uniform_until, ratio=args.ratio)
    return CharGrid.from_spec(spec)


def _grid_dict(grid: CharGrid) -> dict:
    spec = grid.spec
    return {"u_max": spec.u_max, "per_unit": spec.per_unit, "uniform_until": spec.uniform_until,
            "ratio": spec.ratio, "u_nodes": grid.n_u}


def _plot_data(field: RadialField, w: WeightExponents, samples: int, seed: int) -> str:
    t, r = sample_domain(field.grid.u_max, samples, seed)
    phi = field.interpolate(t, r)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "r", "phi", "weighted_phi"])
    for row in zip(t, r, phi, np.abs(phi) * w.weight(t, r)):
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def _field_csv(field: RadialField) -> str:
    buf = io.StringIO()
    write_field_rows(buf, *field.nodes())
    return buf.getvalue()


def _verify(args, lemma: int) -> int:
    try:
        if lemma == 1:
            consts = lemma1_constants(args.p, args.q)
        else:
            consts = lemma2_constants(args.p, args.q, args.lam)
    except HypothesisError as exc:
        if not args.allow_out_of_hypothesis:
            raise UsageError(str(exc)) from exc
        consts = None
    if lemma == 1:
        src = source_lemma1(DecayProfile(args.A, args.p, args.q))
        nu = args.p - 2.0
        expected_slope = -(args.p - 1.0)
    else:
        src = source_lemma2(DecayProfile(args.A, args.p, args.q, args.lam))
        nu = args.p + min(args.q, args.lam - 1.0) - 1.0
        expected_slope = -(nu + 1.0)
    w = WeightExponents(1.0, nu)
    grid = _grid(args)
    field = solve(src, grid)
    payload = {"command": args.command, "seed": args.seed, "grid": _grid_dict(grid),
               "profile": {"A": args.A, "p": args.p, "q": args.q, "lambda": args.lam if lemma == 2 else 0.0},
               "constants": consts.as_dict() if consts else None}
    passed = True
    if consts is not None:
        C = consts.C
        if lemma == 2 and args.constant == "corrected":
            C = lemma2_corrected_C(args.p, args.q, args.lam)
        report = verify_decay(field, w, args.A * C, args.samples, args.seed)
        payload["report"] = report.to_json_dict()
        payload["constant_choice"] = args.constant if lemma == 2 else "printed"
        passed = report.passed
    else:
        payload["report"] = None
    if grid.u_max >= 1000.0:
        slope = axis_decay_slope(field, 10.0, 1000.0)
        slope_ok = abs(slope - expected_slope) <= SLOPE_RTOL * abs(expected_slope)
        payload["axis_slope"] = {"measured": slope, "expected": expected_slope, "rtol": SLOPE_RTOL,
                                 "window": [10.0, 1000.0], "pass": slope_ok}
        passed = passed and slope_ok
    else:
        payload["axis_slope"] = None
    payload["pass"] = passed
    if args.plot_data:
        write_atomic(Path(args.plot_data), _plot_data(field, w, args.samples, args.seed))
    if args.field_csv:
        write_atomic(Path(args.field_csv), _field_csv(field))
    text = _field_csv(field) if args.format == "csv" else dump_json(payload)
    write_atomic(args.output, text)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_verify_lemma1(args) -> int:
    return _verify(args, 1)


def cmd_verify_lemma2(args) -> int:
    return _verify(args, 2)


def cmd_compare(args) -> int:
    if args.lam:
        src = source_lemma2(DecayProfile(args.A, args.p, args.q, args.lam))
    else:
        src = source_lemma1(DecayProfile(args.A, args.p, args.q))
    F = radial_volumetric(src, MODULATIONS[args.modulation], label=args.modulation)
    check = verify_majorant(F, args.majorant_samples, args.t_max, args.r_max, args.seed)
    payload = {"command": "compare", "seed": args.seed, "modulation": args.modulation,
               "majorant": {"passed": check.passed, "samples": check.samples, "witness": check.witness}}
    if not check.passed:
        payload["pass"] = False
        write_atomic(args.output, dump_json(payload))
        return EXIT_FAIL
    t, x = sample_spacetime(args.points, args.t_max, args.r_max, args.seed)
    rule = SphereRule(args.n_polar, args.n_azimuth)
    report = compare(F, list(zip(t, x)), args.tol, rule=rule)
    payload.update(report.to_json_dict())
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x1", "x2", "x3", "phi1", "phi2", "margin"])
        for p in report.points:
            writer.writerow([repr(v) for v in (p.t, *p.x, p.phi1, p.phi2, p.margin)])
        text = buf.getvalue()
    else:
        text = dump_json(payload)
    write_atomic(args.output, text)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_iterate(args) -> int:
    try:
        cfg = IterationConfig(kind=args.kind, amplitude=args.amplitude, p=args.p, lam=args.lam, q=args.q,
                              epsilon=args.epsilon, max_steps=args.steps, grid=_grid(args),
                              allow_out_of_hypothesis=args.allow_out_of_hypothesis, samples=args.samples,
                              seed=args.seed, constant=args.constant)
    except (HypothesisError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    trace = run_iteration(cfg)
    if args.format == "json":
        payload = trace.to_json_dict()
        payload["seed"] = args.seed
        text = dump_json(payload)
    else:
        buf = io.StringIO()
        trace.to_csv(buf)
        text = buf.getvalue()
    write_atomic(args.output, text)
    return EXIT_OK if trace.induction_ok and not trace.diverged else EXIT_FAIL


def cmd_inequality_suite(args) -> int:
    report = run_inequality_suite(args.count, args.seed)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check", "run", "violations"])
        for name in sorted(report.runs):
            writer.writerow([name, report.runs[name]["run"], report.runs[name]["violations"]])
        text = buf.getvalue()
    else:
        text = dump_json(report.to_json_dict())
    write_atomic(args.output, text)
    return EXIT_OK if report.passed else EXIT_FAIL


def _common(p: argparse.ArgumentParser, fmt_default: str = "json") -> None:
    p.add_argument("--output", "-o", type=Path, default=None, help="report path (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default=fmt_default)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="quasi-random sampling seed")
    p.add_argument("--samples", type=int, default=1000, help="interpolated samples in sup measurements")
    p.add_argument("--allow-out-of-hypothesis", action="store_true",
                   help="run even if the exponents violate the estimate's hypotheses")


def _grid_options(p: argparse.ArgumentParser) -> None:
    d = GridSpec()
    p.add_argument("--u-max", type=float, default=d.u_max)
    p.add_argument("--per-unit", type=int, default=d.per_unit)
    p.add_argument("--uniform-until", type=float, default=d.uniform_until)
    p.add_argument("--ratio", type=float, default=d.ratio)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavedecay", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, default=None, help="TOML file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, lemma in (("verify-lemma1", cmd_verify_lemma1, 1), ("verify-lemma2", cmd_verify_lemma2, 2)):
        kind = "A/(<t+r>^p <t-r>^q)" if lemma == 1 else "A/(<r>^lambda <t+r>^p <t-r>^q)"
        p = sub.add_parser(name, help=f"solve for the source {kind} and check its weighted decay bound")
        p.add_argument("--A", type=float, default=1.0)
        p.add_argument("--p", type=float, default=3.0 if lemma == 1 else 1.0)
        p.add_argument("--q", type=float, default=2.0 if lemma == 1 else 3.0)
        if lemma == 2:
            p.add_argument("--lambda", dest="lam", type=float, default=3.0)
            p.add_argument("--constant", choices=["printed", "corrected"], default="printed")
        p.add_argument("--plot-data", default=None, help="write t,r,phi,weighted_phi samples to this CSV")
        p.add_argument("--field-csv", default=None, help="write the solved field table to this CSV")
        _common(p)
        _grid_options(p)
        p.set_defaults(func=fn, lam=0.0 if lemma == 1 else 3.0, constant="printed")

    p = sub.add_parser("compare", help="check |box^-1 F| <= box^-1 G against the 3D retarded integral")
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--p", type=float, default=3.0)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--modulation", choices=sorted(MODULATIONS), default="cos")
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--r-max", type=float, default=10.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--majorant-samples", type=int, default=4096)
    p.add_argument("--n-polar", type=int, default=24)
    p.add_argument("--n-azimuth", type=int, default=64)
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("iterate", help="Picard iteration with weighted-norm tracking")
    p.add_argument("--kind", choices=["semilinear", "potential"], default="semilinear")
    p.add_argument("--A", "--V0", dest="amplitude", type=float, default=0.1)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--constant", choices=["printed", "corrected"], default="printed")
    _common(p, fmt_default="csv")
    _grid_options(p)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("inequality-suite", help="randomized checks of every intermediate inequality")
    p.add_argument("--count", type=int, default=1000)
    _common(p)
    p.set_defaults(func=cmd_inequality_suite)
    return parser


def _load_config(path: Path, command: str) -> dict:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    merged = {k: v for k, v in data.items() if not isinstance(v, dict)}
    merged.update(data.get(command, {}))
    return {k.replace("-", "_"): v for k, v in merged.items()}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            defaults = _load_config(args.config, args.command)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            parser.error(f"cannot read config: {exc}")
        defaults = {{"lambda": "lam", "a": "A", "v0": "amplitude"}.get(k.lower(), k): v for k, v in defaults.items()}
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(defaults) - known)
        if unknown:
            parser.error(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if getattr(args, "kind", None) == "semilinear" and args.p is None:
        args.p = 3.0
    if getattr(args, "kind", None) == "potential" and args.lam is None:
        args.lam = 3.0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"wavedecay {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, FloatingPointError) as exc:
        print(f"wavedecay {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
