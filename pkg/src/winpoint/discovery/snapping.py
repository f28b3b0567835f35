"""Turn a continuous point vector into a verified rational configuration."""
from __future__ import annotations

import itertools
import math
import time
from typing import Callable

import numpy as np

from ..conditioning import kappa2_batch, vandermonde_kappa
from ..cooktoom import PointConfiguration, construct_transforms, verify_exact
from ..errors import DiscoveryError, InvalidConfigurationError
from ..exact import format_rational, rationals_within, snap_to_rational
from ..rng import STREAM_NEIGHBORHOOD, stream
from .results import DiscoveryResult, canonical_order

NEIGHBORHOOD_RADIUS = 1.2
NEIGHBORHOOD_CAP = 100_000
_CHUNK = 50_000


def verified_result(points, tile, mode, seed, provenance, started, dtype=None) -> DiscoveryResult:
    """Build, exactly verify and package a configuration."""
    config = PointConfiguration(tile[0], tile[1], canonical_order(points))
    triple = construct_transforms(config)
    ok = verify_exact(triple, *tile).exact_zero
    provenance.append("exact-verification:" + ("pass" if ok else "FAIL"))
    return DiscoveryResult(config, vandermonde_kappa(config), ok, mode, seed,
                           time.perf_counter() - started, provenance, dtype)


def _distinct_rows(V: np.ndarray) -> np.ndarray:
    if V.shape[1] < 2:
        return np.ones(V.shape[0], dtype=bool)
    S = np.sort(V, axis=1)
    return np.all(np.diff(S, axis=1) > 0, axis=1)


def _product_chunks(sizes):
    it = itertools.product(*[range(s) for s in sizes])
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), len(sizes))


def neighborhood_search(points, tile, d_max: int, seed: int, allowed: Callable | None = None,
                        radius: float = NEIGHBORHOOD_RADIUS, cap: int = NEIGHBORHOOD_CAP):
    """Lowest-kappa distinct combination of nearby rationals.

    Returns (points, kappa, note). Enumerates the full product when it has at
    most ``cap`` elements, otherwise draws ``cap`` uniform samples.
    """
    cands = []
    for x in points:
        c = rationals_within(float(x), radius, d_max)
        if allowed is not None:
            c = [q for q in c if allowed(q)]
        if not c:
            raise DiscoveryError(f"no candidates near {x}")
        cands.append(c)
    values = [np.array([float(q) for q in c]) for c in cands]
    sizes = [len(c) for c in cands]
    total = math.prod(sizes)
    k = len(points)
    if total <= cap:
        note = f"neighborhood:enumerated {total}"
        chunks = _product_chunks(sizes)
    else:
        note = f"neighborhood:sampled {cap} of {total}"
        rng = stream(STREAM_NEIGHBORHOOD, seed, *tile)
        idx_all = np.stack([rng.integers(0, s, size=cap) for s in sizes], axis=1)
        chunks = iter(np.array_split(idx_all, max(1, cap // _CHUNK)))
    best = (math.inf, None)
    for idx in chunks:
        if idx.size == 0:
            break
        V = np.stack([values[c][idx[:, c]] for c in range(k)], axis=1)
        ok = _distinct_rows(V)
        if not ok.any():
            continue
        ks = kappa2_batch(V[ok])
        j = int(np.argmin(ks))
        if ks[j] < best[0]:
            row = idx[np.nonzero(ok)[0][j]]
            best = (float(ks[j]), [cands[c][row[c]] for c in range(k)])
    if best[1] is None:
        raise DiscoveryError("neighborhood search found no distinct configuration")
    return best[1], best[0], note


def snap_and_verify(points, tile, d_max: int = 10, seed: int = 0, mode: str = "es",
                    allowed: Callable | None = None, dtype: str | None = None,
                    radius: float = NEIGHBORHOOD_RADIUS, cap: int = NEIGHBORHOOD_CAP,
                    provenance: list | None = None, started: float | None = None) -> DiscoveryResult:
    started = time.perf_counter() if started is None else started
    provenance = [] if provenance is None else provenance
    snapped = [snap_to_rational(float(x), d_max, 5, allowed=allowed) for x in points]
    provenance.append("snap:" + ",".join(format_rational(q) for q in snapped))
    if len(set(snapped)) == len(snapped):
        try:
            return verified_result(snapped, tile, mode, seed, provenance, started, dtype)
        except InvalidConfigurationError as exc:
            provenance.append(f"snap-rejected:{exc}")
    else:
        provenance.append("snap-rejected:duplicate points")
    try:
        repaired, _, note = neighborhood_search(points, tile, d_max, seed, allowed, radius, cap)
    except DiscoveryError as exc:
        raise DiscoveryError(str(exc), best_candidate=[format_rational(q) for q in snapped]) from exc
    provenance.append(note)
    return verified_result(repaired, tile, mode, seed, provenance, started, dtype)
