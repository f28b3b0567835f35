"""Exhaustive search over point sets closed under negation."""
from __future__ import annotations

import itertools
import math
import time
from fractions import Fraction
from typing import Callable

import numpy as np

from ..conditioning import kappa2_batch
from ..errors import DiscoveryError
from .results import DiscoveryResult
from .snapping import verified_result

SYMMETRIC_CAP = 1_000_000
_CHUNK = 100_000
# kappa values this close count as ties; ties go to the simpler rationals
NEAR_TIE_REL = 1e-3


def positive_candidates(d_max: int, max_value: int = 5, allowed: Callable | None = None) -> list[Fraction]:
    """Distinct a/b with b <= d_max and 0 < a/b <= max_value, ascending."""
    found = {Fraction(a, b) for b in range(1, d_max + 1) for a in range(1, max_value * b + 1)}
    if allowed is not None:
        found = {q for q in found if allowed(q) and allowed(-q)}
    return sorted(found)


def symmetric_layout(k: int) -> tuple[bool, int]:
    """(contains zero, number of +/- pairs) for k finite points."""
    return (k % 2 == 1, k // 2)


def symmetric_points(pairs, with_zero: bool) -> list[Fraction]:
    out = [Fraction(0)] if with_zero else []
    for p in pairs:
        out.extend((p, -p))
    return out


def _combination_chunks(n_cands: int, n_pairs: int, cap: int):
    it = itertools.islice(itertools.combinations(range(n_cands), n_pairs), cap)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), n_pairs)


def symmetric_search(tile, d_max: int = 10, cap: int = SYMMETRIC_CAP, allowed: Callable | None = None,
                     mode: str = "symmetric", seed: int = 0, dtype: str | None = None) -> DiscoveryResult:
    """Minimal-kappa symmetric configuration among the first ``cap`` combinations.

    Combinations of pair magnitudes are visited in lexicographic order of the
    ascending candidate list; kappa is ranked in float64 and the winner is
    then constructed and verified exactly. Sets whose kappa is within
    NEAR_TIE_REL of the minimum are treated as tied and the one with the
    smallest largest denominator (then smallest denominator sum) wins.
    """
    started = time.perf_counter()
    m, r = tile
    k = m + r - 2
    with_zero, n_pairs = symmetric_layout(k)
    cands = positive_candidates(d_max, allowed=allowed)
    if allowed is not None and with_zero and not allowed(Fraction(0)):
        raise DiscoveryError("zero is not admissible")
    provenance = []
    if n_pairs == 0:
        provenance.append("symmetric:trivial layout")
        return verified_result(symmetric_points([], with_zero), tile, mode, seed, provenance, started, dtype)
    total = math.comb(len(cands), n_pairs)
    if total == 0:
        raise DiscoveryError(f"only {len(cands)} pair candidates for {n_pairs} pairs")
    vals = np.array([float(q) for q in cands])
    dens = np.array([q.denominator for q in cands])
    best_k = math.inf
    near = []  # (kappa, visit order, index tuple) within the tie band of the running minimum
    visited = 0
    for idx in _combination_chunks(len(cands), n_pairs, cap):
        pos = vals[idx]
        parts = [np.zeros((idx.shape[0], 1))] if with_zero else []
        parts += [pos, -pos]
        ks = kappa2_batch(np.concatenate(parts, axis=1))
        best_k = min(best_k, float(ks.min()))
        keep = np.nonzero(ks <= best_k * (1 + NEAR_TIE_REL))[0]
        near = [t for t in near if t[0] <= best_k * (1 + NEAR_TIE_REL)]
        near += [(float(ks[j]), visited + int(j), tuple(idx[j])) for j in keep]
        visited += idx.shape[0]
    truncated = visited < total
    provenance.append(f"symmetric:visited {visited} of {total} combinations" + (" (truncated)" if truncated else ""))
    if not near:
        raise DiscoveryError("symmetric enumeration found no valid configuration")
    choice = min(near, key=lambda t: (int(dens[list(t[2])].max()), int(dens[list(t[2])].sum()), t[0], t[1]))
    if choice[0] > best_k:
        provenance.append(f"symmetric:near-tie preferred simpler set (kappa {choice[0]:.6g} vs minimum {best_k:.6g})")
    best = (choice[0], choice[2])
    pairs = [cands[i] for i in best[1]]
    result = verified_result(symmetric_points(pairs, with_zero), tile, mode, seed, provenance, started, dtype)
    if not result.verified:
        raise DiscoveryError("symmetric winner failed exact verification",
                             best_candidate=result.config.point_strings())
    return result


def was_truncated(result: DiscoveryResult) -> bool:
    return any("(truncated)" in p for p in result.provenance)
