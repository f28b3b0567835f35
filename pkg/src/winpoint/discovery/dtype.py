"""Search restricted to values exactly representable in a low-precision format."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from ..errors import InvalidInputError
from ..rng import STREAM_DTYPE
from .es import ESConfig, es_run
from .results import DiscoveryResult
from .snapping import snap_and_verify

REPRESENTABILITY_WEIGHT = 0.1
SNAP_PROBABILITY = 0.3

# (max |numerator|, max binary exponent) for n / 2^k formats
_DYADIC = {"float16": (2048, 10), "bfloat16": (256, 7)}
KINDS = ("float16", "bfloat16", "int8")


@dataclass(frozen=True)
class DtypeConstraint:
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown dtype {self.kind!r}; choose from {KINDS}")

    def contains(self, q) -> bool:
        q = Fraction(q)
        if self.kind == "int8":
            return q.denominator == 1 and -128 <= q.numerator <= 127
        max_num, max_exp = _DYADIC[self.kind]
        den = q.denominator
        if den & (den - 1):
            return False
        return den.bit_length() - 1 <= max_exp and abs(q.numerator) <= max_num

    def grid(self, d_max: int, bound_factor: int = 5) -> list[Fraction]:
        """Representable a/b with b <= d_max and |a| <= bound_factor * b, ascending."""
        vals = {Fraction(a, b) for b in range(1, d_max + 1)
                for a in range(-bound_factor * b, bound_factor * b + 1)}
        return sorted(q for q in vals if self.contains(q))

    def round_trip(self, x: float) -> float:
        """x rounded to the format and back to float64."""
        if self.kind == "float16":
            return float(np.float16(x))
        if self.kind == "bfloat16":
            return round_bf16(x)
        return float(np.clip(np.rint(x), -128, 127))


def is_representable(q, c: DtypeConstraint) -> bool:
    return c.contains(q)


def round_bf16(x: float) -> float:
    """Round to bfloat16 (round-to-nearest-even on the float32 bit pattern)."""
    f = np.array([x], dtype=np.float32)
    if not np.isfinite(f[0]):
        return float(f[0])
    bits = f.view(np.uint32)[0].item()
    bits += 0x7FFF + ((bits >> 16) & 1)
    out = np.array([(bits >> 16) << 16], dtype=np.uint32).view(np.float32)[0]
    return float(out)


class _Nearest:
    def __init__(self, grid: list[Fraction]):
        self.vals = np.array([float(q) for q in grid])

    def __call__(self, X: np.ndarray) -> np.ndarray:
        v = self.vals
        pos = np.clip(np.searchsorted(v, X), 1, len(v) - 1) if len(v) > 1 else np.zeros(X.shape, dtype=int)
        if len(v) == 1:
            return np.full_like(X, v[0])
        lo, hi = v[pos - 1], v[pos]
        return np.where(np.abs(X - lo) <= np.abs(hi - X), lo, hi)


def dtype_aware_search(tile, c: DtypeConstraint, cfg: ESConfig | None = None, d_max: int = 10,
                       mode: str = "dtype_aware") -> DiscoveryResult:
    started = time.perf_counter()
    cfg = cfg or ESConfig()
    grid = c.grid(d_max)
    if not grid:
        raise InvalidInputError(f"no {c.kind} values with denominator <= {d_max}")
    nearest = _Nearest(grid)

    def mutate(X, rngs):
        mask = np.stack([g.random(X.shape[1]) < SNAP_PROBABILITY for g in rngs])
        return np.where(mask, nearest(X), X)

    def penalty(X):
        return REPRESENTABILITY_WEIGHT * np.mean(np.abs(X - nearest(X)), axis=1)

    run = es_run(tile, cfg, mutate=mutate, penalty=penalty, stream_tag=STREAM_DTYPE)
    provenance = [f"dtype-es:{c.kind} fitness={run.best_fitness:.6g}"]
    return snap_and_verify(run.best, tile, d_max, cfg.seed, mode=mode, allowed=c.contains,
                           dtype=c.kind, provenance=provenance, started=started)


def with_seed(cfg: ESConfig, seed: int) -> ESConfig:
    return replace(cfg, seed=seed)
