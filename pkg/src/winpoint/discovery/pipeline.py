"""Top-level discovery entry point, on-disk cache and seed studies."""
from __future__ import annotations

import json
import math
import os
import statistics
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .. import catalog
from ..conditioning import vandermonde_kappa
from ..cooktoom import construct_transforms, verify_exact
from ..errors import DiscoveryError, InvalidInputError, ResourceLimitError, WinpointError
from .dtype import DtypeConstraint, dtype_aware_search
from .es import ESConfig, es_run
from .results import MODES, DiscoveryResult
from .snapping import snap_and_verify
from .symmetric import SYMMETRIC_CAP, symmetric_search, was_truncated

CACHE_ENV = "WINPOINT_CACHE_DIR"
MAX_FINITE_POINTS = 12
KAPPA_SLACK = 1.05


@dataclass(frozen=True)
class DiscoverOptions:
    d_max: int = 10
    seed: int = 0
    dtype: str | None = None
    es: ESConfig = field(default_factory=ESConfig)
    cache_dir: str | None = None
    symmetric_cap: int = SYMMETRIC_CAP
    neighborhood_cap: int = 100_000


def _check_tile(tile):
    try:
        m, r = (int(v) for v in tile)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad tile {tile!r}") from exc
    if m < 1 or r < 1:
        raise InvalidInputError(f"tile sizes must be positive, got {tile!r}")
    if m + r - 2 > MAX_FINITE_POINTS:
        raise ResourceLimitError(f"F({m},{r}) needs {m + r - 2} finite points (limit {MAX_FINITE_POINTS})")
    return m, r


def cache_path(cache_dir, tile, mode, d_max, dtype, seed) -> Path:
    name = f"F{tile[0]}x{tile[1]}_{mode}_d{d_max}_{dtype or 'exact'}_s{seed}.json"
    return Path(cache_dir) / name


def _write_atomic(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(data, fh, indent=2)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_cache(path: Path, tile):
    """(result or None, warning or None)."""
    if not path.exists():
        return None, None
    try:
        res = DiscoveryResult.from_dict(json.loads(path.read_text()))
        if res.config.tile != tuple(tile):
            return None, "cache-corrupt: tile mismatch"
        ok = verify_exact(construct_transforms(res.config), *tile).exact_zero
        if not ok or not res.verified:
            return None, "cache-corrupt: entry failed re-verification"
        k = vandermonde_kappa(res.config)
        if not math.isclose(k, res.kappa2_v, rel_tol=1e-9):
            return None, "cache-corrupt: stored kappa does not match points"
        return res, None
    except (ValueError, WinpointError, KeyError, TypeError) as exc:
        return None, f"cache-corrupt: {exc}"


def best_known_kappa(tile, cache_dir=None) -> float | None:
    """Lowest kappa among catalog entries and verified cache files for the tile."""
    vals = []
    entry = catalog.best_known(tile)
    if entry is not None:
        vals.append(entry.reference_kappa2)
    if cache_dir and Path(cache_dir).is_dir():
        for p in Path(cache_dir).glob(f"F{tile[0]}x{tile[1]}_*.json"):
            res, _ = _read_cache(p, tile)
            if res is not None and res.dtype is None:
                vals.append(res.kappa2_v)
    return min(vals) if vals else None


def _es_discover(tile, opts: DiscoverOptions, provenance, started, mode="es") -> DiscoveryResult:
    cfg = replace(opts.es, seed=opts.seed)
    run = es_run(tile, cfg)
    provenance.append(f"es:fitness={run.best_fitness:.6g}")
    return snap_and_verify(run.best, tile, opts.d_max, opts.seed, mode=mode,
                           cap=opts.neighborhood_cap, provenance=provenance, started=started)


def _pipeline(tile, opts: DiscoverOptions, started) -> DiscoveryResult:
    provenance = []
    sym = None
    try:
        sym = symmetric_search(tile, opts.d_max, opts.symmetric_cap, mode="pipeline", seed=opts.seed)
        provenance += sym.provenance
        provenance.append(f"symmetric:kappa={sym.kappa2_v:.6g}")
    except DiscoveryError as exc:
        provenance.append(f"symmetric:failed {exc}")
    target = best_known_kappa(tile, opts.cache_dir)
    need_es = sym is None or was_truncated(sym) or (target is not None and sym.kappa2_v > KAPPA_SLACK * target)
    if not need_es:
        provenance.append("symmetric:accepted")
        return replace(sym, provenance=provenance, runtime=time.perf_counter() - started)
    provenance.append("es:fallback" + (f" (target {target:.6g})" if target is not None else ""))
    es_prov = []
    try:
        es_res = _es_discover(tile, opts, es_prov, started, mode="pipeline")
    except DiscoveryError as exc:
        if sym is None:
            raise
        provenance.append(f"es:failed {exc}")
        return replace(sym, provenance=provenance, runtime=time.perf_counter() - started)
    provenance += es_prov
    if sym is not None and sym.kappa2_v <= es_res.kappa2_v:
        provenance.append("selected:symmetric")
        return replace(sym, provenance=provenance, runtime=time.perf_counter() - started)
    provenance.append("selected:es")
    return replace(es_res, provenance=provenance, runtime=time.perf_counter() - started)


def discover(tile, mode: str = "pipeline", options: DiscoverOptions | None = None) -> DiscoveryResult:
    opts = options or DiscoverOptions()
    tile = _check_tile(tile)
    if mode == "dtype":
        mode = "dtype_aware"
    if mode not in MODES:
        raise InvalidInputError(f"unknown mode {mode!r}; choose from {MODES}")
    if mode == "dtype_aware" and opts.dtype is None:
        opts = replace(opts, dtype="float16")
    dtype = opts.dtype if mode == "dtype_aware" else None
    warning = None
    path = None
    if opts.cache_dir:
        path = cache_path(opts.cache_dir, tile, mode, opts.d_max, dtype, opts.seed)
        cached, warning = _read_cache(path, tile)
        if cached is not None:
            cached.provenance.append("cache-hit")
            return cached
    started = time.perf_counter()
    if mode == "symmetric":
        res = symmetric_search(tile, opts.d_max, opts.symmetric_cap, seed=opts.seed)
    elif mode == "es":
        res = _es_discover(tile, opts, [], started)
    elif mode == "dtype_aware":
        res = dtype_aware_search(tile, DtypeConstraint(dtype), replace(opts.es, seed=opts.seed), opts.d_max)
    else:
        res = _pipeline(tile, opts, started)
    if warning:
        res.provenance.insert(0, warning)
    if path is not None and res.verified:
        _write_atomic(path, res.to_dict())
    return res


@dataclass
class ReproducibilitySummary:
    tile: tuple
    seeds: list
    kappas: list
    configs: list
    failures: dict
    mean: float
    std: float
    cv: float
    min: float
    max: float

    @property
    def identical_configs(self) -> bool:
        return len(set(tuple(c) for c in self.configs)) <= 1

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["tile"] = {"m": self.tile[0], "r": self.tile[1]}
        d["identical_configs"] = self.identical_configs
        d["failures"] = {str(k): v for k, v in self.failures.items()}
        return d


def _one_seed(args):
    tile, seed, opts = args
    try:
        return seed, discover(tile, "es", replace(opts, seed=seed)), None
    except WinpointError as exc:
        return seed, None, str(exc)


def reproducibility_study(tile, seeds, options: DiscoverOptions | None = None,
                          workers: int = 1) -> ReproducibilitySummary:
    seeds = list(seeds)
    if len(seeds) < 2:
        raise InvalidInputError("a reproducibility study needs at least two seeds")
    opts = options or DiscoverOptions()
    jobs = [(tuple(tile), s, opts) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_one_seed, jobs))
    else:
        outcomes = [_one_seed(j) for j in jobs]
    kappas, configs, failures = [], [], {}
    for seed, res, err in outcomes:
        if res is None or not res.verified:
            failures[seed] = err or "unverified"
            continue
        kappas.append(res.kappa2_v)
        configs.append(res.config.point_strings())
    if not kappas:
        raise DiscoveryError("every seed failed")
    mean = statistics.fmean(kappas)
    std = statistics.pstdev(kappas)
    return ReproducibilitySummary(tuple(tile), seeds, kappas, configs, failures, mean, std,
                                  std / mean if mean else math.nan, min(kappas), max(kappas))
