"""Exact rational scalars and matrices, snapping and neighborhood enumeration.

Scalars are ``fractions.Fraction`` (always canonical, hashable, arbitrary
precision). ``RationalMatrix`` is a small immutable dense matrix on top of it.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, RangeError, ShapeError, SingularMatrixError

Rational = Fraction

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


class _Infinity:
    """The point at infinity. Singleton, equal only to itself."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


def as_rational(value) -> Fraction:
    """Coerce int, Fraction or text ("a/b", "2") to a Fraction.

    Floats are refused: silently turning 0.1 into a 55-bit fraction is
    almost never what a caller wants. Use ``Fraction(x)`` or
    ``snap_to_rational`` explicitly.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidInputError(f"not a rational: {value!r}")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return parse_rational(value)
    raise InvalidInputError(f"not a rational: {value!r}")


def parse_rational(text: str) -> Fraction:
    match = _RATIONAL_RE.match(text)
    if not match:
        raise InvalidInputError(f"cannot parse rational {text!r}")
    num = int(match.group(1))
    den = int(match.group(2)) if match.group(2) is not None else 1
    if den == 0:
        raise InvalidInputError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class RationalMatrix:
    """Immutable dense matrix of Fractions, row-major."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, data: Iterable[Iterable]):
        rows = tuple(tuple(as_rational(v) for v in row) for row in data)
        if rows and any(len(row) != len(rows[0]) for row in rows):
            raise ShapeError("ragged rows")
        self._data = rows
        self.rows = len(rows)
        self.cols = len(rows[0]) if rows else 0

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls([[0] * cols for _ in range(rows)])

    @classmethod
    def _wrap(cls, rows) -> "RationalMatrix":
        # trusted constructor: rows already tuples of Fractions
        obj = cls.__new__(cls)
        obj._data = tuple(tuple(r) for r in rows)
        obj.rows = len(obj._data)
        obj.cols = len(obj._data[0]) if obj._data else 0
        return obj

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, idx):
        i, j = idx
        return self._data[i][j]

    def row(self, i: int) -> tuple:
        return self._data[i]

    def column(self, j: int) -> tuple:
        return tuple(row[j] for row in self._data)

    def tolist(self) -> list[list[Fraction]]:
        return [list(row) for row in self._data]

    def entries(self):
        for row in self._data:
            yield from row

    @property
    def T(self) -> "RationalMatrix":
        return RationalMatrix._wrap(zip(*self._data)) if self.rows else RationalMatrix._wrap([])

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
        cols = other.T._data if other.rows else ()
        out = []
        for row in self._data:
            out.append([sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols])
        return RationalMatrix._wrap(out)

    def _elementwise(self, other, op):
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")
        return RationalMatrix._wrap(
            [[op(a, b) for a, b in zip(r1, r2)] for r1, r2 in zip(self._data, other._data)]
        )

    def __add__(self, other):
        return self._elementwise(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._elementwise(other, lambda a, b: a - b)

    def scale(self, c) -> "RationalMatrix":
        c = as_rational(c)
        return RationalMatrix._wrap([[c * v for v in row] for row in self._data])

    def kron(self, other: "RationalMatrix") -> "RationalMatrix":
        out = []
        for row_a in self._data:
            for row_b in other._data:
                out.append([a * b for a in row_a for b in row_b])
        return RationalMatrix._wrap(out)

    def max_abs(self) -> Fraction:
        return max((abs(v) for v in self.entries()), default=Fraction(0))

    def __eq__(self, other):
        return isinstance(other, RationalMatrix) and self._data == other._data

    def __hash__(self):
        return hash(self._data)

    def __repr__(self):
        body = "; ".join(" ".join(format_rational(v) for v in row) for row in self._data)
        return f"RationalMatrix([{body}])"

    def to_strings(self) -> list[list[str]]:
        return [[format_rational(v) for v in row] for row in self._data]

    def to_float64(self) -> np.ndarray:
        return to_float64(self)


def to_float64(M: RationalMatrix) -> np.ndarray:
    """Nearest float64 to every entry (Fraction.__float__ rounds correctly)."""
    out = np.empty(M.shape, dtype=np.float64)
    try:
        for i in range(M.rows):
            for j in range(M.cols):
                out[i, j] = float(M[i, j])
    except OverflowError as exc:
        raise RangeError(f"entry ({i},{j}) outside float64 range") from exc
    return out


def _eliminate(A: RationalMatrix, B: RationalMatrix):
    """Gauss-Jordan on [A | B]. Returns (reduced rows, pivot columns)."""
    if A.rows != B.rows:
        raise ShapeError(f"row count mismatch {A.rows} vs {B.rows}")
    aug = [list(ra) + list(rb) for ra, rb in zip(A._data, B._data)]
    n_rows, n_cols = A.rows, A.cols
    pivots = []
    r = 0
    for c in range(n_cols):
        # largest float image among nonzero candidates; lowest row on ties
        best = None
        for i in range(r, n_rows):
            v = aug[i][c]
            if v != 0:
                mag = abs(float(v)) if abs(v) < 10**300 else math.inf
                if best is None or mag > best[0]:
                    best = (mag, i)
        if best is None:
            continue
        p = best[1]
        aug[r], aug[p] = aug[p], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [v * inv for v in aug[r]]
        for i in range(n_rows):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return aug, pivots


def exact_solve(A: RationalMatrix, B: RationalMatrix) -> RationalMatrix:
    """Solve A X = B exactly for square nonsingular A."""
    if A.rows != A.cols:
        raise ShapeError(f"exact_solve needs a square matrix, got {A.shape}")
    aug, pivots = _eliminate(A, B)
    if len(pivots) < A.cols:
        raise SingularMatrixError("matrix is singular over the rationals")
    n = A.cols
    return RationalMatrix._wrap([row[n:] for row in aug])


def solve_consistent(A: RationalMatrix, B: RationalMatrix) -> RationalMatrix:
    """Solve an over-determined but consistent system A X = B exactly.

    A must have full column rank. Raises SingularMatrixError when the
    solution is not unique and ValueError (InvalidInputError) when the
    system has no solution.
    """
    aug, pivots = _eliminate(A, B)
    n = A.cols
    if len(pivots) < n:
        raise SingularMatrixError("system is rank deficient")
    for row in aug[n:]:
        if any(v != 0 for v in row[n:]):
            raise InvalidInputError("system is inconsistent")
    return RationalMatrix._wrap([row[n:] for row in aug[:n]])


def _check_finite(x) -> Fraction:
    try:
        xf = float(x)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"not a real number: {x!r}") from exc
    if not math.isfinite(xf):
        raise InvalidInputError(f"non-finite value {x!r}")
    return x if isinstance(x, Fraction) else Fraction(xf)


def _snap_key(xq: Fraction, q: Fraction):
    return (abs(xq - q), q.denominator, abs(q.numerator))


def snap_to_rational(x: float, d_max: int = 10, numerator_bound_factor: int = 5,
                     allowed=None) -> Fraction:
    """Nearest a/b with 1 <= b <= d_max and |a| <= factor*b.

    Ties go to the smaller denominator, then the smaller |numerator|.
    ``allowed`` optionally filters candidates (e.g. a dtype membership test);
    it must keep at least one candidate.
    """
    if d_max < 1 or numerator_bound_factor < 1:
        raise InvalidInputError("d_max and numerator_bound_factor must be >= 1")
    xq = _check_finite(x)
    if allowed is None:
        best = None
        for b in range(1, d_max + 1):
            bound = numerator_bound_factor * b
            a0 = math.floor(xq * b)
            for a in (a0, a0 + 1):
                a = max(-bound, min(bound, a))
                q = Fraction(a, b)
                key = _snap_key(xq, q)
                if best is None or key < best[0]:
                    best = (key, q)
        return best[1]
    cands = [q for q in _all_candidates(d_max, numerator_bound_factor) if allowed(q)]
    if not cands:
        raise InvalidInputError("no candidate satisfies the filter")
    return min(cands, key=lambda q: _snap_key(xq, q))


def _all_candidates(d_max: int, factor: int) -> list[Fraction]:
    seen = set()
    for b in range(1, d_max + 1):
        for a in range(-factor * b, factor * b + 1):
            seen.add(Fraction(a, b))
    return sorted(seen)


def rationals_within(x: float, radius: float, d_max: int = 10,
                     numerator_bound_factor: int = 5) -> list[Fraction]:
    """All canonical a/b (b <= d_max, |a| <= 5b) within ``radius`` of x.

    Sorted by distance, then denominator, then numerator.
    """
    xq = _check_finite(x)
    rq = _check_finite(radius)
    if rq <= 0:
        raise InvalidInputError("radius must be positive")
    found = set()
    for b in range(1, d_max + 1):
        bound = numerator_bound_factor * b
        lo = max(-bound, math.ceil((xq - rq) * b))
        hi = min(bound, math.floor((xq + rq) * b))
        for a in range(lo, hi + 1):
            q = Fraction(a, b)
            if abs(xq - q) <= rq:
                found.add(q)
    return sorted(found, key=lambda q: (abs(xq - q), q.denominator, q.numerator))


def rational_vector(values: Sequence) -> tuple[Fraction, ...]:
    return tuple(as_rational(v) for v in values)
