"""Condition numbers and norm diagnostics for Vandermonde and transform matrices."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .cooktoom import PointConfiguration, build_vandermonde, construct_transforms
from .errors import InvalidInputError, NoFeasibleBaselineError, ShapeError
from .exact import RationalMatrix

NORMS = ("one", "two", "inf", "fro")
_NP_ORD = {"one": 1, "inf": np.inf, "fro": "fro"}


def kappa(matrix, norm: str = "two") -> float:
    """Condition number of a float64 matrix.

    The 2-norm value is sigma_max / sigma_min and also accepts rectangular
    input. Other norms need a square matrix and use ||M|| * ||M^-1||.
    Returns +inf when the matrix is numerically singular.
    """
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {M.shape}")
    if M.size == 0:
        return 1.0
    if norm == "two":
        s = np.linalg.svd(M, compute_uv=False)
        if not np.all(np.isfinite(s)) or s[-1] == 0.0:
            return math.inf
        return float(s[0] / s[-1])
    if norm not in _NP_ORD:
        raise InvalidInputError(f"unknown norm {norm!r}; choose from {NORMS}")
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"{norm}-norm condition number needs a square matrix, got {M.shape}")
    try:
        inv = np.linalg.inv(M)
    except np.linalg.LinAlgError:
        return math.inf
    ordv = _NP_ORD[norm]
    return float(np.linalg.norm(M, ordv) * np.linalg.norm(inv, ordv))


def vandermonde_f64(points) -> np.ndarray:
    """Square float64 Vandermonde of the given finite points."""
    p = np.asarray(points, dtype=np.float64)
    return p[:, None] ** np.arange(p.size)[None, :]


def kappa2_batch(points: np.ndarray) -> np.ndarray:
    """kappa_2 of the square Vandermonde for each row of ``points``."""
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2:
        raise ShapeError("expected a 2D array of point sets")
    if P.shape[1] == 0:
        return np.ones(P.shape[0])
    V = P[:, :, None] ** np.arange(P.shape[1])[None, None, :]
    s = np.linalg.svd(V, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = s[:, 0] / s[:, -1]
    out[~np.isfinite(out)] = np.inf
    return out


def vandermonde_kappa(config: PointConfiguration, norm: str = "two") -> float:
    k = len(config.finite_points)
    if k == 0:
        return 1.0
    V = build_vandermonde(config.finite_points, k).to_float64()
    return kappa(V, norm)


@dataclass
class ConditioningReport:
    tile: tuple
    points: list
    kappa_v: dict
    kappa_at: dict
    kappa_bt: dict
    kappa_g: dict
    norm_product: float
    kappa_v_2d: float
    max_abs_entry: dict
    zero_count: dict
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tile"] = {"m": self.tile[0], "r": self.tile[1]}
        return d


def _all_norms(M: np.ndarray, norms) -> dict:
    out = {}
    for nm in norms:
        if nm != "two" and M.shape[0] != M.shape[1]:
            continue  # undefined for rectangular matrices
        out[nm] = kappa(M, nm)
    return out


def analyze(config: PointConfiguration, norms=NORMS) -> ConditioningReport:
    k = len(config.finite_points)
    V = build_vandermonde(config.finite_points, k).to_float64() if k else np.ones((0, 0))
    triple = construct_transforms(config)
    at, g, bt = triple.to_float64()
    norms = tuple(norms)
    if "two" not in norms:
        norms = ("two",) + norms
    kv = _all_norms(V, norms)
    spectral = lambda M: float(np.linalg.norm(M, 2))  # noqa: E731
    mats = {"at": at, "g": g, "bt": bt}
    return ConditioningReport(
        tile=config.tile,
        points=config.point_strings(),
        kappa_v=kv,
        kappa_at=_all_norms(at, norms),
        kappa_bt=_all_norms(bt, norms),
        kappa_g=_all_norms(g, norms),
        norm_product=spectral(at) * spectral(bt) * spectral(g),
        kappa_v_2d=kv["two"] ** 2,
        max_abs_entry={k_: float(np.max(np.abs(M))) for k_, M in mats.items()},
        zero_count={k_: int(np.count_nonzero(M == 0.0)) for k_, M in mats.items()},
    )


def verify_kron_squaring(matrix) -> float:
    M = np.asarray(matrix, dtype=np.float64)
    if min(M.shape) < 2:
        raise ShapeError("need at least two singular values")
    return kappa(np.kron(M, M)) / kappa(M) ** 2


def chebyshev_nodes(count: int) -> np.ndarray:
    """First-kind nodes cos((2k-1) pi / (2 count)), k = 1..count."""
    k = np.arange(1, count + 1)
    return np.cos((2 * k - 1) * np.pi / (2 * count))


@dataclass
class ChebyshevBaseline:
    raw_points: list
    best_scale: float
    best_shift: float
    best_kappa2: float
    raw_kappa2: float

    @property
    def points(self) -> np.ndarray:
        return self.best_scale * np.asarray(self.raw_points) + self.best_shift

    def to_dict(self) -> dict:
        d = asdict(self)
        d["points"] = self.points.tolist()
        return d


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    # integer stepping keeps grid values like 0.0 exact
    count = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


def chebyshev_baseline(n_points: int, scale_range=(0.5, 5.0), shift_range=(-2.0, 2.0),
                       grid_step: float = 0.005, near_zero: float = 0.05) -> ChebyshevBaseline:
    """Best affine image a*x + b of Chebyshev nodes, keeping one node near 0."""
    if n_points < 2:
        raise InvalidInputError("need at least two points")
    x = chebyshev_nodes(n_points)
    scales = _grid(*scale_range, grid_step)
    shifts = _grid(*shift_range, grid_step)
    best = (math.inf, None, None)
    for a in scales:
        mapped = a * x[None, :] + shifts[:, None]
        feasible = np.min(np.abs(mapped), axis=1) <= near_zero
        if not feasible.any():
            continue
        idx = np.nonzero(feasible)[0]
        ks = kappa2_batch(mapped[idx])
        j = int(np.argmin(ks))
        if ks[j] < best[0]:
            best = (float(ks[j]), float(a), float(shifts[idx[j]]))
    if best[1] is None:
        raise NoFeasibleBaselineError("no affine map satisfies the near-zero constraint")
    return ChebyshevBaseline(x.tolist(), best[1], best[2], best[0], float(kappa2_batch(x[None, :])[0]))


def legendre_to_monomial(size: int) -> RationalMatrix:
    """Column j holds the monomial coefficients of the Legendre polynomial P_j."""
    polys = [[Fraction(1)], [Fraction(0), Fraction(1)]]
    for j in range(1, size - 1):
        nxt = [Fraction(0)] * (j + 2)
        for i, c in enumerate(polys[j]):
            nxt[i + 1] += Fraction(2 * j + 1, j + 1) * c
        for i, c in enumerate(polys[j - 1]):
            nxt[i] -= Fraction(j, j + 1) * c
        polys.append(nxt)
    polys = polys[:size]
    return RationalMatrix([[polys[j][i] if i < len(polys[j]) else 0 for j in range(size)]
                           for i in range(size)])


def legendre_kappa(config: PointConfiguration) -> float:
    k = len(config.finite_points)
    if k == 0:
        return 1.0
    V = build_vandermonde(config.finite_points, k)
    L = V @ legendre_to_monomial(k)
    return kappa(L.to_float64())
