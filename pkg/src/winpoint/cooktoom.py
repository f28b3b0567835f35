"""Exact Cook-Toom (Winograd) transform construction and verification.

Layout conventions used everywhere in the package:

* a tile F(m, r) uses n = m + r - 1 points; the first n - 1 are finite
  rationals, the last slot is always the point at infinity;
* Lagrange factors F_p = prod_{j != p} (a_p - a_j) are folded into G;
* Bt is whatever matrix makes the bilinear identity hold, found by an exact
  linear solve, so it is unique once At and G are fixed.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DuplicatePointError,
    InvalidConfigurationError,
    InvalidInputError,
    ResourceLimitError,
    ShapeError,
    SingularMatrixError,
)
from .exact import (
    INFINITY,
    RationalMatrix,
    as_rational,
    format_rational,
    parse_rational,
    solve_consistent,
)


def _check_distinct(points: Sequence[Fraction]) -> None:
    seen = set()
    for p in points:
        if p in seen:
            raise DuplicatePointError(f"duplicate interpolation point {format_rational(p)}")
        seen.add(p)


@dataclass(frozen=True)
class PointConfiguration:
    m: int
    r: int
    finite_points: tuple

    def __post_init__(self):
        if not (isinstance(self.m, int) and isinstance(self.r, int)) or self.m < 1 or self.r < 1:
            raise InvalidConfigurationError(f"tile sizes must be positive integers, got ({self.m}, {self.r})")
        pts = tuple(as_rational(p) for p in self.finite_points)
        object.__setattr__(self, "finite_points", pts)
        if len(pts) != self.m + self.r - 2:
            raise InvalidConfigurationError(
                f"F({self.m},{self.r}) needs {self.m + self.r - 2} finite points, got {len(pts)}")
        _check_distinct(pts)

    @property
    def n(self) -> int:
        return self.m + self.r - 1

    @property
    def tile(self) -> tuple[int, int]:
        return (self.m, self.r)

    @property
    def points(self) -> tuple:
        """All n points, infinity last."""
        return self.finite_points + (INFINITY,)

    def point_strings(self) -> list[str]:
        return [format_rational(p) for p in self.finite_points]

    def float_points(self) -> np.ndarray:
        return np.array([float(p) for p in self.finite_points], dtype=np.float64)

    @classmethod
    def from_strings(cls, m: int, r: int, points: Sequence[str]) -> "PointConfiguration":
        return cls(m, r, tuple(parse_rational(str(p)) for p in points))

    def __str__(self):
        return f"F({self.m},{self.r}) {{{', '.join(self.point_strings())}}}"


class TripleF64(NamedTuple):
    at: np.ndarray
    g: np.ndarray
    bt: np.ndarray


@dataclass(frozen=True)
class TransformTriple:
    at: RationalMatrix
    g: RationalMatrix
    bt: RationalMatrix

    def to_float64(self) -> TripleF64:
        return TripleF64(self.at.to_float64(), self.g.to_float64(), self.bt.to_float64())


@dataclass(frozen=True)
class ConvolutionTensor:
    m: int
    r: int
    n: int

    def entry(self, i: int, k: int, j: int) -> int:
        if not (0 <= i < self.m and 0 <= k < self.r and 0 <= j < self.n):
            raise IndexError((i, k, j))
        return 1 if i + k == j else 0

    def to_numpy(self) -> np.ndarray:
        t = np.zeros((self.m, self.r, self.n), dtype=np.float64)
        for i in range(self.m):
            for k in range(self.r):
                t[i, k, i + k] = 1.0
        return t


@dataclass(frozen=True)
class VerificationReport:
    exact_zero: bool
    max_residual: Fraction
    checked_entries: int

    def to_dict(self) -> dict:
        return {
            "exact_zero": self.exact_zero,
            "max_residual": format_rational(self.max_residual),
            "checked_entries": self.checked_entries,
        }


def standard_points(count: int) -> tuple:
    """The usual small-integer choice 0, 1, -1, 2, -2, ..."""
    pts = []
    k = 0
    while len(pts) < count:
        if k == 0:
            pts.append(Fraction(0))
        else:
            pts.append(Fraction(k))
            if len(pts) < count:
                pts.append(Fraction(-k))
        k += 1
    return tuple(pts)


def standard_config(m: int, r: int) -> PointConfiguration:
    return PointConfiguration(m, r, standard_points(m + r - 2))


def build_vandermonde(finite_points: Sequence, cols: int, with_infinity_row: bool = False) -> RationalMatrix:
    if cols < 1:
        raise InvalidInputError("cols must be >= 1")
    pts = [as_rational(p) for p in finite_points]
    _check_distinct(pts)
    rows = [[p ** j for j in range(cols)] for p in pts]
    if with_infinity_row:
        rows.append([0] * (cols - 1) + [1])
    return RationalMatrix(rows)


def lagrange_factors(finite_points: Sequence) -> list[Fraction]:
    pts = [as_rational(p) for p in finite_points]
    _check_distinct(pts)
    out = []
    for i, a in enumerate(pts):
        f = Fraction(1)
        for j, b in enumerate(pts):
            if j != i:
                f *= a - b
        out.append(f)
    return out


def convolution_tensor(m: int, r: int) -> ConvolutionTensor:
    if m < 1 or r < 1:
        raise InvalidInputError("m and r must be >= 1")
    return ConvolutionTensor(m, r, m + r - 1)


def output_transform(config: PointConfiguration) -> RationalMatrix:
    m, n = config.m, config.n
    rows = [[p ** i for p in config.finite_points] + [1 if i == m - 1 else 0] for i in range(m)]
    return RationalMatrix(rows)


def kernel_transform(config: PointConfiguration) -> RationalMatrix:
    r = config.r
    factors = lagrange_factors(config.finite_points)
    rows = [[p ** k / f for k in range(r)] for p, f in zip(config.finite_points, factors)]
    rows.append([0] * (r - 1) + [1])
    return RationalMatrix(rows)


def construct_transforms(config: PointConfiguration) -> TransformTriple:
    """Exact (At, G, Bt) for the configuration."""
    m, r, n = config.m, config.r, config.n
    at = output_transform(config)
    g = kernel_transform(config)
    # one equation row per (i, k): sum_p At[i,p] G[p,k] Bt[p,j] = [i+k == j]
    lhs = []
    rhs = []
    for i in range(m):
        for k in range(r):
            lhs.append([at[i, p] * g[p, k] for p in range(n)])
            rhs.append([1 if i + k == j else 0 for j in range(n)])
    try:
        bt = solve_consistent(RationalMatrix(lhs), RationalMatrix(rhs))
    except SingularMatrixError as exc:
        raise InvalidConfigurationError(f"rank-deficient system for {config}") from exc
    except InvalidInputError as exc:
        raise InvalidConfigurationError(f"inconsistent system for {config}") from exc
    triple = TransformTriple(at, g, bt)
    report = verify_exact(triple, m, r)
    if not report.exact_zero:  # cannot happen for a consistent solve, kept as a gate
        raise InvalidConfigurationError(f"constructed triple failed verification for {config}")
    return triple


def verify_exact(triple: TransformTriple, m: int, r: int) -> VerificationReport:
    n = m + r - 1
    if triple.at.shape != (m, n) or triple.g.shape != (n, r) or triple.bt.shape != (n, n):
        raise ShapeError(
            f"expected At {m}x{n}, G {n}x{r}, Bt {n}x{n}; got "
            f"{triple.at.shape}, {triple.g.shape}, {triple.bt.shape}")
    worst = Fraction(0)
    for i in range(m):
        for k in range(r):
            coef = [triple.at[i, p] * triple.g[p, k] for p in range(n)]
            for j in range(n):
                s = sum((c * triple.bt[p, j] for p, c in enumerate(coef) if c), Fraction(0))
                res = abs((1 if i + k == j else 0) - s)
                if res > worst:
                    worst = res
    return VerificationReport(worst == 0, worst, m * r * n)


def kron_expand(triple: TransformTriple, max_entries: int = 2_000_000) -> TransformTriple:
    total = sum((M.rows * M.cols) ** 2 for M in (triple.at, triple.g, triple.bt))
    if total > max_entries:
        raise ResourceLimitError(f"2D expansion needs {total} entries (cap {max_entries})")
    return TransformTriple(triple.at.kron(triple.at), triple.g.kron(triple.g), triple.bt.kron(triple.bt))


def winograd_apply_2d(triple_f64, kernel: np.ndarray, tile: np.ndarray) -> np.ndarray:
    """Float64 evaluation of At [(G g G^T) * (Bt d B)] A."""
    at, g, bt = (np.asarray(x, dtype=np.float64) for x in triple_f64)
    m, n = at.shape
    r = g.shape[1]
    kernel = np.asarray(kernel, dtype=np.float64)
    tile = np.asarray(tile, dtype=np.float64)
    if g.shape[0] != n or bt.shape != (n, n):
        raise ShapeError("inconsistent transform shapes")
    if kernel.shape != (r, r) or tile.shape != (n, n):
        raise ShapeError(f"expected kernel {r}x{r} and tile {n}x{n}, got {kernel.shape} and {tile.shape}")
    u = g @ kernel @ g.T
    v = bt @ tile @ bt.T
    return at @ (u * v) @ at.T


def _matvec(M: RationalMatrix, v):
    return [sum((a * b for a, b in zip(M.row(i), v)), Fraction(0)) for i in range(M.rows)]


def winograd_apply_exact(triple: TransformTriple, kernel: Sequence, data: Sequence) -> list[Fraction]:
    """1D exact evaluation of At [(G g) * (Bt d)]."""
    u = _matvec(triple.g, [as_rational(x) for x in kernel])
    v = _matvec(triple.bt, [as_rational(x) for x in data])
    return _matvec(triple.at, [a * b for a, b in zip(u, v)])


def winograd_apply_2d_exact(triple: TransformTriple, kernel, tile) -> RationalMatrix:
    g = RationalMatrix(kernel)
    d = RationalMatrix(tile)
    u = triple.g @ g @ triple.g.T
    v = triple.bt @ d @ triple.bt.T
    prod = RationalMatrix._wrap([[a * b for a, b in zip(ru, rv)] for ru, rv in zip(u.tolist(), v.tolist())])
    return triple.at @ prod @ triple.at.T


def direct_correlation_exact(kernel: Sequence, data: Sequence, m: int) -> list[Fraction]:
    g = [as_rational(x) for x in kernel]
    d = [as_rational(x) for x in data]
    return [sum((g[k] * d[i + k] for k in range(len(g))), Fraction(0)) for i in range(m)]


def export_dict(config: PointConfiguration, triple: TransformTriple) -> dict:
    f64 = triple.to_float64()
    return {
        "tile": {"m": config.m, "r": config.r},
        "points": config.point_strings(),
        "infinity": True,
        "AT": triple.at.to_strings(),
        "G": triple.g.to_strings(),
        "BT": triple.bt.to_strings(),
        "AT_f64": f64.at.tolist(),
        "G_f64": f64.g.tolist(),
        "BT_f64": f64.bt.tolist(),
    }


def config_from_dict(data: dict) -> PointConfiguration:
    try:
        tile = data["tile"]
        return PointConfiguration.from_strings(int(tile["m"]), int(tile["r"]), data["points"])
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"missing or malformed field: {exc}") from exc


def triple_from_dict(data: dict) -> TransformTriple | None:
    """Exact triple stored in an export document, or None if absent."""
    if not all(key in data for key in ("AT", "G", "BT")):
        return None
    try:
        mats = [RationalMatrix([[parse_rational(str(v)) for v in row] for row in data[key]])
                for key in ("AT", "G", "BT")]
    except TypeError as exc:
        raise InvalidInputError(f"malformed matrix: {exc}") from exc
    return TransformTriple(*mats)
