"""Command-line interface.

Exit codes: 0 success, 1 domain failure (verification or discovery), 2 usage
or parse error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, catalog
from .conditioning import (
    NORMS,
    analyze,
    chebyshev_baseline,
    kappa,
    legendre_kappa,
    vandermonde_kappa,
)
from .cooktoom import (
    PointConfiguration,
    build_vandermonde,
    config_from_dict,
    construct_transforms,
    export_dict,
    kron_expand,
    standard_config,
    triple_from_dict,
    verify_exact,
)
from .discovery import CACHE_ENV, DiscoverOptions, ESConfig, discover, reproducibility_study
from .errors import (
    DiscoveryError,
    DuplicatePointError,
    InvalidConfigurationError,
    InvalidInputError,
    ShapeError,
    WinpointError,
)
from .lowprec import QuantSpec, measure_tile_error

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class DomainFailure(Exception):
    pass


# ---------------------------------------------------------------- helpers

def parse_tile(text: str) -> tuple[int, int]:
    try:
        m, r = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"tile must look like 'm,r', got {text!r}") from None
    if m < 1 or r < 1:
        raise UsageError(f"tile sizes must be positive, got {text!r}")
    return m, r


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def resolve(ref: str):
    """Catalog name or JSON file -> (config, exact triple stored in the file or None, input digests)."""
    if ref in catalog.CATALOG:
        return catalog.get(ref).config, None, {}
    path = Path(ref)
    if not path.is_file():
        raise UsageError(f"{ref!r} is neither a catalog entry ({', '.join(catalog.CATALOG)}) nor a file")
    try:
        data = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise UsageError(f"{ref}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise UsageError(f"{ref}: expected a JSON object")
    try:
        config = config_from_dict(data)
        triple = triple_from_dict(data)
    except (DuplicatePointError, InvalidConfigurationError) as exc:
        raise DomainFailure(f"{ref}: {exc}") from None
    except InvalidInputError as exc:
        raise UsageError(f"{ref}: {exc}") from None
    return config, triple, {str(path): _sha256(path)}


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def manifest(command: str, args: argparse.Namespace, payload: dict, inputs: dict) -> dict:
    arguments = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    return {
        "command": command,
        "arguments": json.loads(_canonical(arguments)),
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "inputs": inputs,
        "payload_sha256": hashlib.sha256(_canonical(payload).encode()).hexdigest(),
    }


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields = list(rows[0].keys()) if rows else []
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _table(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0].keys())
    cells = [[_fmt(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "{" + ", ".join(str(x) for x in v) + "}"
    return str(v)


def emit(args, command: str, payload: dict, rows: list[dict], inputs=None) -> None:
    """Write payload (+ manifest) to --out and render to stdout per --format."""
    doc = dict(payload)
    doc["manifest"] = manifest(command, args, payload, inputs or {})
    if args.out:
        out = Path(args.out)
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            if args.format == "csv":
                out.write_text(_csv(rows))
            else:
                out.write_text(json.dumps(doc, indent=2) + "\n")
        except OSError as exc:
            raise UsageError(f"cannot write {out}: {exc}") from None
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    elif args.format == "csv":
        print(_csv(rows), end="")
    else:
        print(_table(rows))


# ---------------------------------------------------------------- commands

def cmd_discover(args) -> int:
    tile = parse_tile(args.tile)
    es = ESConfig()
    overrides = {k: getattr(args, k) for k in ("population", "generations", "restarts") if getattr(args, k)}
    if overrides:
        es = replace(es, **overrides)
    opts = DiscoverOptions(d_max=args.d_max, seed=args.seed, dtype=args.dtype, es=es, cache_dir=args.cache_dir)
    try:
        res = discover(tile, args.mode, opts)
    except DiscoveryError as exc:
        raise DomainFailure(f"discovery failed: {exc} (best candidate: {exc.best_candidate})") from None
    payload = res.to_dict()
    emit(args, "discover", payload, [{"tile": f"F({tile[0]},{tile[1]})", "mode": res.mode,
                                       "points": res.config.point_strings(), "kappa2_v": res.kappa2_v,
                                       "verified": res.verified, "seed": res.seed}])
    return EXIT_OK if res.verified else EXIT_FAIL


def cmd_verify(args) -> int:
    config, triple, inputs = resolve(args.ref)
    source = "file matrices" if triple is not None else "constructed"
    if triple is None:
        triple = construct_transforms(config)
    try:
        report = verify_exact(triple, config.m, config.r)
    except ShapeError as exc:
        raise DomainFailure(f"matrices do not fit F({config.m},{config.r}): {exc}") from None
    payload = {"tile": {"m": config.m, "r": config.r}, "points": config.point_strings(),
               "source": source, **report.to_dict()}
    emit(args, "verify", payload, [{"tile": f"F({config.m},{config.r})", "points": config.point_strings(),
                                     "exact_zero": report.exact_zero,
                                     "max_residual": payload["max_residual"],
                                     "checked_entries": report.checked_entries}], inputs)
    return EXIT_OK if report.exact_zero else EXIT_FAIL


def _two_d_section(config: PointConfiguration) -> dict:
    triple = construct_transforms(config)
    k = len(config.finite_points)
    V = build_vandermonde(config.finite_points, k).to_float64()
    big = kron_expand(triple).to_float64()
    one = triple.to_float64()
    out = {"kappa_v_2d": kappa(np.kron(V, V))}
    for name, M, M2 in (("at", one.at, big.at), ("g", one.g, big.g), ("bt", one.bt, big.bt)):
        out[f"kappa_{name}_2d"] = kappa(M2)
        out[f"kron_ratio_{name}"] = kappa(M2) / kappa(M) ** 2
    out["kron_ratio_v"] = out["kappa_v_2d"] / kappa(V) ** 2
    return out


def cmd_analyze(args) -> int:
    config, _, inputs = resolve(args.ref)
    norms = tuple(n.strip() for n in args.norms.split(",")) if args.norms else NORMS
    bad = [n for n in norms if n not in NORMS]
    if bad:
        raise UsageError(f"unknown norms {bad}; choose from {NORMS}")
    report = analyze(config, norms)
    payload = report.to_dict()
    row = {"tile": f"F({config.m},{config.r})", "points": config.point_strings(),
           "kappa_v": report.kappa_v["two"], "kappa_at": report.kappa_at["two"],
           "kappa_bt": report.kappa_bt["two"], "kappa_g": report.kappa_g["two"],
           "norm_product": report.norm_product}
    if args.two_d:
        payload["two_d"] = _two_d_section(config)
        row["kappa_v_2d"] = payload["two_d"]["kappa_v_2d"]
    if args.legendre:
        payload["kappa_legendre"] = legendre_kappa(config)
        row["kappa_legendre"] = payload["kappa_legendre"]
    emit(args, "analyze", payload, [row], inputs)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config, _, inputs = resolve(args.ref)
    gran = args.granularity.replace("-", "_")
    if args.precision != "int8" and gran != "per_tensor":
        raise UsageError(f"--granularity {args.granularity} only applies to --precision int8")
    try:
        spec = QuantSpec(args.precision, gran, args.transforms)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    rep = measure_tile_error(config, spec, args.samples, args.seed, args.distribution)
    payload = rep.to_dict()
    emit(args, "simulate", payload, [{"tile": f"F({config.m},{config.r})", "points": config.point_strings(),
                                       "spec": spec.label(), "samples": rep.samples, "seed": rep.seed,
                                       "mean_rel_l2": rep.mean_rel_l2, "median_rel_l2": rep.median_rel_l2,
                                       "max_rel_l2": rep.max_rel_l2, "saturated": rep.saturated}], inputs)
    return EXIT_OK


def cmd_compare(args) -> int:
    tile = parse_tile(args.tile)
    baselines = [b.strip() for b in args.baselines.split(",") if b.strip()]
    unknown = [b for b in baselines if b not in ("standard", "chebyshev")]
    if unknown:
        raise UsageError(f"unknown baselines {unknown}")
    inputs = {}
    if args.candidate:
        cand, _, inputs = resolve(args.candidate)
        cand_name = args.candidate
    else:
        entry = catalog.best_known(tile)
        if entry is None:
            raise DomainFailure(f"no catalog candidate for F{tile}; pass --candidate")
        cand, cand_name = entry.config, entry.name
    if cand.tile != tile:
        raise UsageError(f"candidate is F{cand.tile}, expected F{tile}")
    k_cand = vandermonde_kappa(cand)
    rows = []
    n_pts = tile[0] + tile[1] - 2
    if "standard" in baselines:
        std = standard_config(*tile)
        rows.append({"method": "standard", "points": std.point_strings(), "kappa2_v": vandermonde_kappa(std)})
    if "chebyshev" in baselines and n_pts >= 2:
        ch = chebyshev_baseline(n_pts)
        rows.append({"method": "chebyshev-opt",
                     "points": [f"{p:.4f}" for p in ch.points],
                     "kappa2_v": ch.best_kappa2})
    rows.append({"method": f"candidate ({cand_name})", "points": cand.point_strings(), "kappa2_v": k_cand})
    for row in rows:
        row["improvement"] = row["kappa2_v"] / k_cand
    payload = {"tile": {"m": tile[0], "r": tile[1]}, "rows": rows}
    emit(args, "compare", payload, rows, inputs)
    return EXIT_OK


def cmd_export(args) -> int:
    config, triple, inputs = resolve(args.ref)
    if triple is None:
        triple = construct_transforms(config)
    try:
        ok = verify_exact(triple, config.m, config.r).exact_zero
    except ShapeError as exc:
        raise DomainFailure(f"matrices do not fit F({config.m},{config.r}): {exc}") from None
    if not ok:
        raise DomainFailure("transforms fail exact verification; refusing to export")
    payload = export_dict(config, triple)
    args.format = "json" if args.format == "text" and args.out is None else args.format
    emit(args, "export", payload, [{"tile": f"F({config.m},{config.r})", "points": config.point_strings(),
                                     "verified": True}], inputs)
    return EXIT_OK


def cmd_repro(args) -> int:
    tile = parse_tile(args.tile)
    try:
        seeds = [int(s) for s in args.seeds.split(",")]
    except ValueError:
        raise UsageError(f"--seeds must be a comma-separated integer list, got {args.seeds!r}") from None
    if len(seeds) < 2:
        raise UsageError("--seeds needs at least two values")
    summary = reproducibility_study(tile, seeds, DiscoverOptions(d_max=args.d_max, cache_dir=args.cache_dir),
                                    workers=args.workers)
    payload = summary.to_dict()
    rows = [{"seed": s, "points": c, "kappa2_v": k}
            for s, c, k in zip([s for s in seeds if s not in summary.failures], summary.configs, summary.kappas)]
    rows.append({"seed": "summary", "points": f"cv={summary.cv:.4%}", "kappa2_v": summary.mean})
    emit(args, "repro", payload, rows)
    return EXIT_OK if not summary.failures else EXIT_FAIL


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cache-dir", default=os.environ.get(CACHE_ENV))
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv", "text"), default="text")

    p = argparse.ArgumentParser(prog="winpoint", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discover", parents=[common], help="search for a point configuration")
    d.add_argument("--tile", required=True)
    d.add_argument("--mode", default="pipeline", choices=("pipeline", "es", "symmetric", "dtype", "dtype_aware"))
    d.add_argument("--d-max", type=int, default=10)
    d.add_argument("--dtype", choices=("float16", "bfloat16", "int8"), default=None)
    d.add_argument("--population", type=int)
    d.add_argument("--generations", type=int)
    d.add_argument("--restarts", type=int)
    d.set_defaults(func=cmd_discover)

    v = sub.add_parser("verify", parents=[common], help="exactly verify a configuration or transform file")
    v.add_argument("ref")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("analyze", parents=[common], help="conditioning report")
    a.add_argument("ref")
    a.add_argument("--norms", default=None, help="comma list of one,two,inf,fro")
    a.add_argument("--2d", dest="two_d", action="store_true")
    a.add_argument("--legendre", action="store_true")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", parents=[common], help="low-precision tile error")
    s.add_argument("ref")
    s.add_argument("--precision", choices=("fp16", "int8", "fp32"), default="int8")
    s.add_argument("--granularity", choices=("per-tensor", "per-channel", "per_tensor", "per_channel"),
                   default="per-tensor")
    s.add_argument("--transforms", choices=("quantized", "fp32"), default="quantized")
    s.add_argument("--distribution", choices=("uniform", "gaussian"), default="uniform")
    s.add_argument("--samples", type=int, default=100)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", parents=[common], help="kappa against baselines")
    c.add_argument("--tile", required=True)
    c.add_argument("--baselines", default="standard,chebyshev")
    c.add_argument("--candidate", default=None)
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("export", parents=[common], help="write exact transforms")
    e.add_argument("ref")
    e.set_defaults(func=cmd_export)

    r = sub.add_parser("repro", parents=[common], help="ES reproducibility across seeds")
    r.add_argument("--tile", required=True)
    r.add_argument("--seeds", default="0,1,2,3,4")
    r.add_argument("--d-max", type=int, default=10)
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        catalog.self_check()
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (DuplicatePointError, InvalidConfigurationError, DiscoveryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except InvalidInputError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WinpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
