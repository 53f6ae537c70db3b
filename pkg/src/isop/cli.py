"""Command-line front end.

    isop stats    --domain disc --basepoint 0,0
    isop theta    --domain square [--basepoint 0.5,0.5]
    isop bound    --domain disc --basepoint 0,0 --bounds bobkov_mc,kls_theta
    isop oracle   --domain box_1x10 --families lines
    isop validate

``--domain`` takes a JSON file or the name of a bundled domain
(``disc``, ``square``, ``box_1x10``, ``cap_0.3``, ``cap_0.6``, ``lens``, ``cube6``).
Exit codes: 0 ok, 1 validation failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import bounds as B
from . import _kernels
from .chords import theta_at, theta_mean
from .domains import DomainError, SchemaError, domain_from_json
from .model_geometry import GeometryError
from .oracle import DEFAULT_LINE_RESOLUTION, OracleError, cut_search_2d, grid_cheeger_2d
from .sampler import DEFAULT_SAMPLES, SamplingError, choose_basepoint, distance_stats, halfspace_concentration

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
MIN_SAMPLES = 100
DEFAULT_THETA_SAMPLES = 2000


class InputError(Exception):
    pass


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _plain(obj):
    """Convert numpy scalars/arrays and tuples to plain Python containers."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _fmt(o)
        return json.dumps(o)

    return enc(_plain(obj), 0) + "\n"


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def to_csv(obj) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _flatten(_plain(obj)):
        if isinstance(v, bool) or v is None:
            v = json.dumps(v)
        elif isinstance(v, float):
            v = _fmt(v)
        w.writerow([k, v])
    return buf.getvalue()


def _emit(doc, args):
    text = to_csv(doc) if args.format == "csv" else dumps(doc)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- inputs


def bundled_domains() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("isop").joinpath("data").iterdir() if p.name.endswith(".json"))


def load_domain(ref: str):
    path = Path(ref)
    if path.is_file():
        text = path.read_text()
    else:
        name = path.name[:-5] if path.name.endswith(".json") else path.name
        res = resources.files("isop").joinpath("data", f"{name}.json")
        if not res.is_file():
            raise InputError(f"domain file {ref!r} not found (bundled: {', '.join(bundled_domains())})")
        text = res.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{ref}: invalid JSON: {exc}") from exc
    return domain_from_json(obj)


def _point(text: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InputError(f"cannot parse point {text!r}") from exc


def _basepoint(K, args, warnings):
    if args.basepoint and args.candidates:
        raise InputError("give either --basepoint or --candidates, not both")
    if args.candidates:
        cands = [_point(c) for c in args.candidates.split(";") if c.strip()]
        x, st = choose_basepoint(K, cands, args.samples, args.seed)
        return x, st
    if args.basepoint:
        x = _point(args.basepoint)
    else:
        x = K.witness
        warnings.append("no basepoint given; using the domain's interior witness")
    return x, distance_stats(K, x, args.samples, args.seed)


def config_echo(args) -> dict:
    keys = ["command", "domain", "basepoint", "candidates", "samples", "theta_samples", "seed", "resolution",
            "refine_iters", "bounds", "kappa", "r0", "lambda0", "families", "grid_h", "format"]
    return {k: getattr(args, k) for k in keys if hasattr(args, k)}


# ---------------------------------------------------------------- commands


def cmd_stats(args, warnings):
    K = load_domain(args.domain)
    x, st = _basepoint(K, args, warnings)
    return {"stats": st.as_dict()}


def _theta_mean(K, args, warnings):
    tm = theta_mean(K, args.theta_samples, args.seed, args.resolution, args.refine_iters)
    if not tm.converged:
        warnings.append("theta refinement did not converge (relative change >= 1e-4); "
                        "theta is a lower estimate, so bounds using it may be optimistic")
    return tm


def cmd_theta(args, warnings):
    K = load_domain(args.domain)
    if args.basepoint:
        est = theta_at(K, _point(args.basepoint), args.resolution, args.refine_iters)
        return {"theta": {"value": est.value, "argmax_direction": est.argmax_direction,
                          "resolution": est.coarse_resolution, "refine_iters": est.refinement_iters}}
    tm = _theta_mean(K, args, warnings)
    return {"theta_mean": {"value": tm.value, "std_error": tm.std_error, "n_samples": tm.n_samples,
                           "resolution": tm.resolution, "refine_iters": tm.refinement_iters,
                           "converged": tm.converged}}


def cmd_bound(args, warnings):
    K = load_domain(args.domain)
    names = [b.strip() for b in args.bounds.split(",") if b.strip()]
    for b in names:
        if b not in B.BOUND_NAMES:
            raise InputError(f"unknown bound {b!r}; choose from {', '.join(B.BOUND_NAMES)}")
    need_stats = any(b in ("bobkov_mc", "bobkov_analytic", "loose_kappa", "kls_E") for b in names)
    x0 = st = None
    if need_stats:
        x0, st = _basepoint(K, args, warnings)
    kappa = K.space.kappa if args.kappa is None else args.kappa
    reports = []
    for b in names:
        if b == "concentration":
            if args.r0 is None:
                raise InputError("concentration bound needs --r0 (and optionally --lambda0)")
            if args.lambda0 is None:
                lam = halfspace_concentration(K, args.r0, args.samples, args.seed)
                warnings.append("lambda0 estimated from half-space cuts only (a lower estimate)")
            else:
                lam = args.lambda0
            reports.append(B.concentration_bound(lam, args.r0))
        elif b == "kls_theta":
            tm = _theta_mean(K, args, warnings)
            reports.append(B.kls_theta_bound(tm.value, tm.std_error))
        elif b in ("bobkov_mc", "bobkov_analytic"):
            reports.append(B.bobkov_bound(K, x0, st, kappa, mode=b.split("_")[1], n=args.samples, seed=args.seed))
        elif b == "kls_E":
            reports.append(B.kls_E_bound(st, kappa))
        elif b == "loose_kappa":
            reports.extend(B.loose_bounds(st.E, kappa, B.bobkov_analytic_constant()))
    out = {"reports": [r.as_dict() for r in reports]}
    if st is not None:
        out["stats"] = st.as_dict()
    return out


def cmd_oracle(args, warnings):
    K = load_domain(args.domain)
    fams = [f.strip() for f in args.families.split(",") if f.strip()]
    res = cut_search_2d(K, fams, args.resolution or DEFAULT_LINE_RESOLUTION)
    out = {"cut_search": res.as_dict()}
    if args.grid_h:
        out["grid_cheeger"] = {"h": args.grid_h, "value": grid_cheeger_2d(K, args.grid_h)}
    return out


def cmd_validate(args, warnings):
    from .validation import run_all

    only = {int(v) for v in args.only.split(",")} if args.only else None
    results = run_all(only, stream=sys.stderr)
    return {"criteria": [c.as_dict() for c in results], "passed": all(c.passed for c in results)}


COMMANDS = {"stats": cmd_stats, "theta": cmd_theta, "bound": cmd_bound, "oracle": cmd_oracle,
            "validate": cmd_validate}


def _samples(text):
    n = int(text)
    if n < MIN_SAMPLES:
        raise argparse.ArgumentTypeError(f"need at least {MIN_SAMPLES} samples")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isop", description="Cheeger constant estimates and bounds for convex domains.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, domain=True):
        if domain:
            sp.add_argument("--domain", required=True, help="domain JSON file or bundled name")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--output", help="write here instead of stdout")

    def point_opts(sp):
        sp.add_argument("--basepoint", help="comma-separated coordinates, e.g. 0,0")
        sp.add_argument("--candidates", help="semicolon-separated candidate basepoints")
        sp.add_argument("--samples", type=_samples, default=DEFAULT_SAMPLES)

    def theta_opts(sp):
        sp.add_argument("--theta-samples", type=_samples, default=DEFAULT_THETA_SAMPLES)
        sp.add_argument("--resolution", type=int, default=None)
        sp.add_argument("--refine-iters", type=int, default=20)

    sp = sub.add_parser("stats", help="E, S, R at a basepoint")
    common(sp)
    point_opts(sp)

    sp = sub.add_parser("theta", help="chord functional at a point, or its mean")
    common(sp)
    sp.add_argument("--basepoint")
    theta_opts(sp)

    sp = sub.add_parser("bound", help="Cheeger lower bounds")
    common(sp)
    point_opts(sp)
    theta_opts(sp)
    sp.add_argument("--bounds", default="kls_theta,bobkov_mc,bobkov_analytic,kls_E")
    sp.add_argument("--kappa", type=float, default=None, help="upper curvature bound at the basepoint")
    sp.add_argument("--r0", type=float, default=None)
    sp.add_argument("--lambda0", type=float, default=None)

    sp = sub.add_parser("oracle", help="upper estimates from cut families")
    common(sp)
    sp.add_argument("--families", default="lines")
    sp.add_argument("--resolution", type=int, default=None)
    sp.add_argument("--grid-h", type=float, default=None)

    sp = sub.add_parser("validate", help="run the acceptance suite")
    common(sp, domain=False)
    sp.add_argument("--only", help="comma-separated criterion numbers")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    warnings: list[str] = []
    try:
        result = COMMANDS[args.command](args, warnings)
    except SchemaError as exc:
        print(f"isop: schema error at {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, DomainError, GeometryError, OracleError, SamplingError, ValueError) as exc:
        print(f"isop: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for w in warnings:
        print(f"isop: warning: {w}", file=sys.stderr)
    doc = {"config": config_echo(args), "backend": _kernels.backend_name(), "warnings": warnings, "result": result}
    _emit(doc, args)
    if args.command == "validate" and not result["passed"]:
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
