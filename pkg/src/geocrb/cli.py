"""Command-line front end.

Subcommands: geometry, sweep, protocol, topology, audit, replay.
Exit codes: 0 success, 2 input or validation error, 3 numerical or fit
failure (an audit with failed checks also exits 3).

Every file written with ``--output`` gets a ``<output>.manifest.json``
next to it; ``geocrb replay <manifest>`` reruns the recorded command.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import (
    FitFailed,
    GeoCRBError,
    IncompatibleSupport,
    NonConvergence,
    NumericalInconsistency,
)
from .estimation import (
    bounds_at,
    gamma_spectrum,
    holevo_sandwich,
    qfim,
    qfim_from_sld,
    sld_pure,
    uhlmann_from_sld,
    uncertainty_slack,
)
from .geometry import chern_number, dd_invariant, generator_moments, qgt, qgt_from_generators, split
from .models import SCHEMES, get_model, random_unitary_model
from .protocol import (
    DEFAULT_AMPLITUDE,
    DEFAULT_GAPS,
    direct_qgt,
    reconstruct_qgt,
    reconstruction_to_dict,
)

SIG_DIGITS = 12
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
DEFAULT_GRIDS = {"qubit": (200, 200), "qutrit": (100, 20, 20)}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# formatting


def _round(x):
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, np.ndarray):
        return _round(x.tolist())
    if isinstance(x, (bool, np.bool_)) or x is None or isinstance(x, str):
        return bool(x) if isinstance(x, np.bool_) else x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj) -> str:
    """JSON text with 12 significant digits and insertion-ordered keys."""
    return json.dumps(_round(obj), indent=2, ensure_ascii=False) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def _matrix_dict(m) -> dict:
    m = np.asarray(m)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"could not parse {what} {text!r} as comma-separated numbers") from None


# ---------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    command: str
    argv: list
    config: dict
    seed: Optional[int]
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))


def _write_output(args, text: str, config: dict) -> None:
    if args.output is None:
        sys.stdout.write(text)
        return
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8", newline="")
    manifest = RunManifest(
        command=args.command,
        argv=list(args.argv),
        config=config,
        seed=getattr(args, "seed", None),
    )
    Path(str(out) + ".manifest.json").write_text(dumps(asdict(manifest)), encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def cmd_geometry(args) -> dict:
    model = get_model(args.model)
    theta = _floats(args.theta, "--theta")
    tensor = qgt(model, theta, args.scheme)
    g, f = split(tensor)
    report = {
        "model": model.name,
        "axes": list(model.axis_labels),
        "theta": theta,
        "method": tensor.method,
        "chi": _matrix_dict(tensor.chi),
        "g": g,
        "F": f,
        "J": qfim(g),
    }
    _write_output(args, dumps(report), {"model": args.model, "theta": theta, "scheme": args.scheme})
    return report


@dataclass(frozen=True)
class SweepSpec:
    model: str
    axis: str
    start: float
    stop: float
    count: int
    fixed: dict
    subspace: Optional[tuple] = None
    weight: str = "qfim"
    scheme: str = "richardson"
    fmt: str = "csv"

    def __post_init__(self):
        if self.count < 2:
            raise UsageError("sweep count must be at least 2")
        if not self.start < self.stop:
            raise UsageError("sweep range needs start < stop")
        if self.weight not in ("qfim", "identity"):
            raise UsageError("weight must be 'qfim' or 'identity'")
        if self.fmt not in ("csv", "json"):
            raise UsageError("format must be 'csv' or 'json'")


def _parse_fixed(text: Optional[str]) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"fixed value {item!r} must look like name=value")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"fixed value {item!r} is not numeric") from None
    return out


def sweep_columns(labels) -> list[str]:
    """Documented CSV header for a sweep over a (sub)space with these axis labels."""
    cols = ["theta"]
    n = len(labels)
    cols += [f"J_{labels[i]}_{labels[j]}" for i in range(n) for j in range(i, n)]
    cols += [f"F_{labels[i]}_{labels[j]}" for i in range(n) for j in range(i + 1, n)]
    cols += ["gamma", "sld_crb", "attainable_qcrb", "sandwich_mid", "sandwich_gamma"]
    return cols


def run_sweep(spec: SweepSpec) -> tuple[list[str], list[list[float]]]:
    model = get_model(spec.model)
    ax = model.axis_index(spec.axis)
    base = np.zeros(model.param_dim)
    for name, value in spec.fixed.items():
        base[model.axis_index(name)] = value
    sub = None
    if spec.subspace is not None:
        sub = [model.axis_index(a) for a in spec.subspace]
        if len(set(sub)) != len(sub) or len(sub) < 1:
            raise UsageError("subspace axes must be distinct")
    labels = [model.axis_labels[i] for i in (sub if sub is not None else range(model.param_dim))]
    n = len(labels)
    rows = []
    for x in np.linspace(spec.start, spec.stop, spec.count):
        theta = base.copy()
        theta[ax] = x
        model.check_domain(theta)
        rep = bounds_at(model, theta, spec.scheme, w=spec.weight, axes=sub)
        row = [float(x)]
        row += [rep.j[i, j] for i in range(n) for j in range(i, n)]
        row += [rep.f[i, j] for i in range(n) for j in range(i + 1, n)]
        row += [rep.gamma, rep.sld_crb, rep.attainable_qcrb, rep.sandwich_mid, rep.sandwich_gamma]
        rows.append([float(v) for v in row])
    return sweep_columns(labels), rows


def cmd_sweep(args):
    lo, hi, count = _floats(args.range, "--range") + [None] * (3 - len(_floats(args.range, "--range")))
    if count is None or float(count) != int(count):
        raise UsageError("--range must be start,stop,count")
    spec = SweepSpec(
        model=args.model,
        axis=args.axis,
        start=lo,
        stop=hi,
        count=int(count),
        fixed=_parse_fixed(args.fixed),
        subspace=tuple(a.strip() for a in args.subspace.split(",")) if args.subspace else None,
        weight=args.weight,
        scheme=args.scheme,
        fmt=args.format,
    )
    header, rows = run_sweep(spec)
    if spec.fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
    else:
        text = dumps({"model": spec.model, "axis": spec.axis, "subspace": spec.subspace,
                      "weight": spec.weight, "columns": header, "rows": rows})
    config = asdict(spec)
    _write_output(args, text, config)
    return header, rows


def cmd_protocol(args) -> dict:
    theta = _floats(args.theta, "--theta")
    gaps = tuple(_floats(args.gaps, "--gaps"))
    if len(gaps) != 2:
        raise UsageError("--gaps needs two values")
    rec = reconstruct_qgt(theta, gaps, args.amplitude, noise=args.noise, seed=args.seed)
    g_ref, f_ref = direct_qgt(theta)
    report = reconstruction_to_dict(rec)
    rel = {}
    ok = True
    for key, est, ref in (("g", rec.g, g_ref), ("F", rec.f, f_ref)):
        err = np.abs(est - ref)
        big = np.abs(ref) > args.abs_floor
        rel[key] = np.where(big, err / np.where(big, np.abs(ref), 1.0), np.nan)
        ok &= bool(np.all(np.where(big, rel[key] < args.rel_tol, err < args.abs_floor)))
    report["direct"] = {"g": g_ref, "F": f_ref}
    report["relative_errors"] = {"g": rel["g"], "F": rel["F"]}
    report["absolute_errors"] = {"g": np.abs(rec.g - g_ref), "F": np.abs(rec.f - f_ref)}
    report["within_tolerance"] = ok
    config = {"theta0": theta, "gaps": list(gaps), "amplitude": args.amplitude, "noise": args.noise}
    _write_output(args, dumps(report), config)
    return report


def cmd_topology(args) -> dict:
    if args.model not in DEFAULT_GRIDS:
        raise UsageError(f"topology supports qubit and qutrit, not {args.model!r}")
    model = get_model(args.model)
    grid = tuple(int(x) for x in _floats(args.grid, "--grid")) if args.grid else DEFAULT_GRIDS[args.model]
    if len(grid) != len(DEFAULT_GRIDS[args.model]) or min(grid) < 1:
        raise UsageError(f"grid for {args.model} needs {len(DEFAULT_GRIDS[args.model])} positive sizes")
    if args.model == "qubit":
        name, value = "chern_number", chern_number(model, grid)
    else:
        name, value = "dixmier_douady", dd_invariant(model, grid)
    report = {"invariant_name": name, "value": value, "grid": list(grid)}
    _write_output(args, dumps(report), {"model": args.model, "grid": list(grid)})
    return report


# audit ----------------------------------------------------------------------

GAMMA_LIMIT = 1e-8
SLACK_LIMIT = -1e-10
ROUTE_LIMIT = 1e-7
ANTISYM_LIMIT = 1e-12


def _parse_dims(text: str) -> tuple[int, int]:
    parts = text.split("-")
    try:
        lo, hi = (int(parts[0]), int(parts[-1]))
    except ValueError:
        raise UsageError(f"--dims {text!r} must look like 2-5") from None
    if len(parts) > 2 or lo < 2 or hi < lo:
        raise UsageError(f"--dims {text!r} must look like 2-5 with 2 <= lo <= hi")
    return lo, hi


def audit_model(model, theta, corrupt: bool = False) -> dict:
    """Margins of every audited property at one point (positive = satisfied)."""
    g_fd, f_fd = split(qgt(model, theta, "richardson"))
    g_gen, f_gen = split(qgt_from_generators(model, theta))
    slds = sld_pure(model, theta, "analytic")
    j_sld = qfim_from_sld(slds.rho, slds)
    f_sld = uhlmann_from_sld(slds.rho, slds)
    j = qfim(g_fd)
    f = f_fd.copy()
    if corrupt:
        f[0, 1] += 0.25
    margins = {}
    margins["antisymmetry"] = ANTISYM_LIMIT - float(np.max(np.abs(f + f.T)))
    routes = max(
        float(np.max(np.abs(j - qfim(g_gen)))),
        float(np.max(np.abs(j - j_sld))),
        float(np.max(np.abs(qfim(g_gen) - j_sld))),
        float(np.max(np.abs(f - f_gen))),
        float(np.max(np.abs(f_gen - f_sld))),
    )
    margins["cross_route"] = ROUTE_LIMIT - routes
    try:
        spec = gamma_spectrum(j, f)
        margins["gamma"] = GAMMA_LIMIT - (spec.gamma_raw - 1.0)
    except (NumericalInconsistency, IncompatibleSupport) as exc:
        margins["gamma"] = -math.inf
        margins["gamma_error"] = str(exc)
    full_rank = spec.rank == j.shape[0] if "gamma_error" not in margins else False
    worst = math.inf
    for w in ("qfim", "identity") if full_rank else ("qfim",):
        try:
            rep = holevo_sandwich(j, f, w)
            tol = 1e-9 * max(1.0, rep.sld_crb)
            chain = (rep.sld_crb, rep.sandwich_mid, rep.sandwich_gamma, rep.sandwich_two)
            worst = min(worst, min(b - a + tol for a, b in zip(chain, chain[1:])))
        except (NumericalInconsistency, IncompatibleSupport):
            worst = -math.inf
    margins["sandwich"] = worst
    cov, comm = generator_moments(model.generators(theta), model.evaluate(theta))
    d = j.shape[0]
    slack = min(uncertainty_slack(cov, comm, a, b) for a in range(d) for b in range(a + 1, d))
    margins["uncertainty"] = slack - SLACK_LIMIT
    return margins


CHECKS = ("gamma", "sandwich", "uncertainty", "cross_route", "antisymmetry")


def run_audit(n_models: int, dims: tuple[int, int], seed: int, inject_corruption: bool = False) -> dict:
    if n_models < 1:
        raise UsageError("--n-models must be at least 1")
    rng = np.random.default_rng(seed)
    failures = {c: 0 for c in CHECKS}
    worst = {c: math.inf for c in CHECKS}
    first_failure = None
    for i in range(n_models):
        n = int(rng.integers(dims[0], dims[1] + 1))
        d = int(rng.integers(2, 4))
        model = random_unitary_model(rng, n, d)
        theta = rng.uniform(0.0, 2 * math.pi, size=d)
        margins = audit_model(model, theta, corrupt=inject_corruption and i == 0)
        for c in CHECKS:
            worst[c] = min(worst[c], margins[c])
            if margins[c] < 0:
                failures[c] += 1
                if first_failure is None:
                    first_failure = {"model_index": i, "check": c, "hilbert_dim": n, "n_params": d}
    return {
        "n_models": n_models,
        "dims": list(dims),
        "seed": seed,
        "checks": list(CHECKS),
        "failures": failures,
        "total_failures": int(sum(failures.values())),
        "worst_margins": worst,
        "first_failure": first_failure,
    }


def cmd_audit(args) -> dict:
    summary = run_audit(args.n_models, _parse_dims(args.dims), args.seed, args.inject_corruption)
    config = {"n_models": args.n_models, "dims": args.dims, "inject_corruption": args.inject_corruption}
    _write_output(args, dumps(summary), config)
    return summary


def cmd_replay(args):
    data = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    argv = list(data["argv"])
    if args.output is not None:
        if "--output" in argv:
            argv[argv.index("--output") + 1] = args.output
        else:
            argv += ["--output", args.output]
    return main(argv)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geocrb", description="Quantum geometric tensor and multiparameter bounds")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("geometry", help="QGT, metric, curvature and QFIM at one point")
    p.add_argument("--model", required=True)
    p.add_argument("--theta", required=True, help="comma-separated radians")
    p.add_argument("--scheme", default="richardson", choices=SCHEMES)
    p.add_argument("--output")

    p = sub.add_parser("sweep", help="bounds along one axis, CSV or JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--axis", required=True)
    p.add_argument("--range", required=True, help="start,stop,count")
    p.add_argument("--fixed", help="other axes, e.g. beta=0,phi=0 (default 0)")
    p.add_argument("--subspace", help="comma-separated axis labels")
    p.add_argument("--weight", default="qfim", choices=("qfim", "identity"))
    p.add_argument("--scheme", default="richardson", choices=SCHEMES)
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--output")

    p = sub.add_parser("protocol", help="simulated modulation protocol on the qutrit model")
    p.add_argument("--theta", default="0.7853981633974483,0,0")
    p.add_argument("--gaps", default=",".join(str(g) for g in DEFAULT_GAPS))
    p.add_argument("--amplitude", type=float, default=DEFAULT_AMPLITUDE)
    p.add_argument("--noise", type=float, default=0.0, help="additive Gaussian population noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rel-tol", type=float, default=0.03)
    p.add_argument("--abs-floor", type=float, default=0.02)
    p.add_argument("--output")

    p = sub.add_parser("topology", help="Chern (qubit) or Dixmier-Douady (qutrit) invariant")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", help="comma-separated grid sizes")
    p.add_argument("--output")

    p = sub.add_parser("audit", help="invariant audit on random unitary-family models")
    p.add_argument("--n-models", type=int, default=500)
    p.add_argument("--dims", default="2-5", help="Hilbert-space dimension range")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-corruption", action="store_true", help="negative control: break F antisymmetry")
    p.add_argument("--output")

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--output")
    return ap


COMMANDS = {
    "geometry": cmd_geometry,
    "sweep": cmd_sweep,
    "protocol": cmd_protocol,
    "topology": cmd_topology,
    "audit": cmd_audit,
    "replay": cmd_replay,
}

NUMERIC_ERRORS = (FitFailed, ArithmeticError, NonConvergence)
INPUT_ERRORS = (ValueError, IndexError, KeyError, GeoCRBError)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        result = COMMANDS[args.command](args)
    except NUMERIC_ERRORS as exc:
        print(f"geocrb {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except INPUT_ERRORS as exc:
        print(f"geocrb {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"geocrb {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "audit" and result["total_failures"]:
        print(f"geocrb audit: {result['total_failures']} check failures", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "replay":
        return result
    return EXIT_OK
