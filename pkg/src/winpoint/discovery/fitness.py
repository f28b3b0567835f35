"""Continuous fitness for point search, evaluated in float64 on whole populations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..conditioning import kappa2_batch

SENTINEL = 1e12
MIN_GAP = 1e-6


@dataclass(frozen=True)
class FitnessBreakdown:
    tensor_error: float
    magnitude_penalty: float
    conditioning_penalty: float
    total: float
    sentinel: bool = False


def float_transforms(P: np.ndarray, m: int, r: int):
    """Batched float64 (At, G, Bt) for rows of finite points ``P`` (shape B x (n-1)).

    Same layout as the exact construction: infinity last, Lagrange factors
    in G. Bt is diag(F, 1) times the inverse of the n x n matrix whose column
    p is (a_p^0 .. a_p^(n-1)) and whose last column is the unit vector e_(n-1);
    this is the unique solution of the tensor identity.
    """
    B, k = P.shape
    n = k + 1
    diff = P[:, :, None] - P[:, None, :]
    idx = np.arange(k)
    diff[:, idx, idx] = 1.0
    F = np.prod(diff, axis=2)

    at = np.zeros((B, m, n))
    at[:, :, :k] = P[:, None, :] ** np.arange(m)[None, :, None]
    at[:, m - 1, k] = 1.0

    g = np.zeros((B, n, r))
    g[:, :k, :] = P[:, :, None] ** np.arange(r)[None, None, :] / F[:, :, None]
    g[:, k, r - 1] = 1.0

    W = np.zeros((B, n, n))
    W[:, :, :k] = P[:, None, :] ** np.arange(n)[None, :, None]
    W[:, n - 1, k] = 1.0
    scale = np.concatenate([F, np.ones((B, 1))], axis=1)
    bt = scale[:, :, None] * np.linalg.inv(W)
    return at, g, bt


def _gap(P: np.ndarray) -> np.ndarray:
    k = P.shape[1]
    if k < 2:
        return np.full(P.shape[0], np.inf)
    S = np.sort(P, axis=1)
    return np.min(np.diff(S, axis=1), axis=1)


def fitness_batch(P, m: int, r: int, lambda1: float, lambda2: float):
    """Fitness of every row of P. Returns (total, tensor_error, magnitude, conditioning)."""
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    B, k = P.shape
    if k != m + r - 2:
        raise ValueError(f"F({m},{r}) needs {m + r - 2} points per row, got {k}")
    total = np.full(B, SENTINEL)
    terr = np.full(B, SENTINEL)
    mag = np.zeros(B)
    cond = np.zeros(B)
    with np.errstate(all="ignore"):
        ok = np.all(np.isfinite(P), axis=1) & (_gap(P) >= MIN_GAP)
        if not ok.any():
            return total, terr, mag, cond
        Q = P[ok]
        try:
            at, g, bt = float_transforms(Q, m, r)
        except np.linalg.LinAlgError:
            # fall back to one row at a time so a single bad row cannot poison the batch
            return _rowwise(P, m, r, lambda1, lambda2)
        n = k + 1
        rec = np.einsum("bip,bpk,bpj->bikj", at, g, bt)
        T = np.zeros((m, r, n))
        for i in range(m):
            T[i, np.arange(r), i + np.arange(r)] = 1.0
        te = np.sqrt(np.sum((rec - T[None]) ** 2, axis=(1, 2, 3)))
        mg = lambda1 * np.sum(Q ** 2, axis=1) / max(k, 1)
        cd = lambda2 * np.log10(kappa2_batch(Q) + 1.0)
        tot = te + mg + cd
        good = np.isfinite(tot)
        sel = np.nonzero(ok)[0][good]
        total[sel] = tot[good]
        terr[sel] = te[good]
        mag[sel] = mg[good]
        cond[sel] = cd[good]
    return total, terr, mag, cond


def _rowwise(P, m, r, lambda1, lambda2):
    outs = [fitness_batch(P[i:i + 1], m, r, lambda1, lambda2) if _invertible(P[i], m, r)
            else tuple(np.array([v]) for v in (SENTINEL, SENTINEL, 0.0, 0.0))
            for i in range(P.shape[0])]
    return tuple(np.concatenate([o[j] for o in outs]) for j in range(4))


def _invertible(p, m, r) -> bool:
    try:
        float_transforms(p[None, :], m, r)
    except np.linalg.LinAlgError:
        return False
    return True


def fitness(points, m: int, r: int, lambda1: float, lambda2: float) -> FitnessBreakdown:
    total, te, mg, cd = fitness_batch(np.asarray(points, dtype=np.float64)[None, :], m, r, lambda1, lambda2)
    if total[0] >= SENTINEL:
        return FitnessBreakdown(SENTINEL, 0.0, 0.0, SENTINEL, sentinel=True)
    return FitnessBreakdown(float(te[0]), float(mg[0]), float(cd[0]), float(total[0]))
