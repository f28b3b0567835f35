"""Built-in point configurations with their reference kappa_2(V)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .conditioning import vandermonde_kappa
from .cooktoom import PointConfiguration, construct_transforms, standard_points, verify_exact
from .errors import InvalidConfigurationError, InvalidInputError
from .exact import parse_rational

SOURCES = ("standard", "published", "published_dtype_aware", "locally_derived")


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    tile: tuple
    points: tuple
    source: str
    reference_kappa2: float

    @property
    def config(self) -> PointConfiguration:
        return PointConfiguration(self.tile[0], self.tile[1], self.points)


def _entry(name, tile, points, source, ref):
    pts = tuple(parse_rational(p) if isinstance(p, str) else p for p in points)
    return CatalogEntry(name, tile, pts, source, ref)


def _pm(*vals):
    out = ["0"] if vals and vals[0] == "0" else []
    for v in vals[len(out):]:
        out += [v, "-" + v]
    return out


_ENTRIES = [
    _entry("std-F23", (2, 3), standard_points(3), "standard", 3.2),
    _entry("std-F43", (4, 3), standard_points(5), "standard", 42.5),
    _entry("std-F63", (6, 3), standard_points(7), "standard", 2075.0),
    _entry("std-F83", (8, 3), standard_points(9), "standard", 1.969e5),
    _entry("std-F45", (4, 5), standard_points(7), "standard", 2075.0),
    _entry("std-F65", (6, 5), standard_points(9), "standard", 1.969e5),
    _entry("disc-F23", (2, 3), _pm("0", "1"), "published", 3.2),
    _entry("disc-F43", (4, 3), _pm("0", "5/6", "7/6"), "published", 14.5),
    _entry("disc-F63", (6, 3), _pm("0", "3/5", "1", "7/6"), "published", 77.0),
    _entry("disc-F83", (8, 3), _pm("0", "2/5", "5/6", "1", "7/6"), "published", 474.0),
    # reference kappa is the value recomputed from these points
    _entry("dtype-F43", (4, 3), _pm("0", "3/4", "5/4"), "published_dtype_aware", 16.54),
    # r = 5 sets come from this package's own pipeline runs (seed 0, d_max 10)
    _entry("disc-F45", (4, 5), _pm("0", "3/5", "1", "7/6"), "locally_derived", 76.64),
    _entry("disc-F65", (6, 5), _pm("0", "4/9", "5/6", "1", "8/7"), "locally_derived", 442.45),
]

CATALOG = {e.name: e for e in _ENTRIES}


def get(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise InvalidInputError(f"unknown catalog entry {name!r}; known: {', '.join(CATALOG)}") from None


def best_known(tile) -> CatalogEntry | None:
    """Lowest-kappa non-standard entry for a tile."""
    cands = [e for e in _ENTRIES if e.tile == tuple(tile) and e.source != "standard"]
    return min(cands, key=lambda e: e.reference_kappa2, default=None)


def standard_entry(tile) -> CatalogEntry | None:
    for e in _ENTRIES:
        if e.tile == tuple(tile) and e.source == "standard":
            return e
    return None


@lru_cache(maxsize=None)
def self_check(tolerance: float = 0.01) -> dict:
    """Verify every entry exactly and compare kappa_2 with its reference.

    Returns {name: recomputed kappa}. Raises on the first failure.
    """
    out = {}
    for e in _ENTRIES:
        cfg = e.config
        if not verify_exact(construct_transforms(cfg), *e.tile).exact_zero:
            raise InvalidConfigurationError(f"catalog entry {e.name} does not verify")
        k = vandermonde_kappa(cfg)
        if abs(k - e.reference_kappa2) > tolerance * e.reference_kappa2:
            raise InvalidConfigurationError(
                f"catalog entry {e.name}: kappa {k:.6g} vs reference {e.reference_kappa2:.6g}")
        out[e.name] = k
    return out
