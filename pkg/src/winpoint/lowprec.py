"""Tile-level FP16 / INT8 emulation of Winograd convolution against an FP64 oracle."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .cooktoom import PointConfiguration, construct_transforms
from .errors import InvalidInputError, ShapeError
from .rng import STREAM_HARNESS, stream

L2_GUARD = 1e-12
ELEMENTWISE_GUARD = 1e-30
PRECISIONS = ("fp16", "int8", "fp32")
GRANULARITIES = ("per_tensor", "per_channel")
TRANSFORM_MODES = ("quantized", "fp32")
DISTRIBUTIONS = ("uniform", "gaussian")


def round_fp16(x):
    """Nearest binary16 value (RNE, subnormals kept, overflow -> +-inf) as float64."""
    arr = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        out = arr.astype(np.float16).astype(np.float64)
    return float(out) if out.ndim == 0 else out


def _scales(t: np.ndarray, granularity: str, channel_axis):
    if granularity == "per_tensor":
        s = np.max(np.abs(t)) / 127.0 if t.size else 0.0
        return np.asarray(s if s > 0 else 1.0, dtype=np.float64)
    if channel_axis is None:
        raise InvalidInputError("per_channel quantization needs a channel axis")
    axes = tuple(a for a in range(t.ndim) if a != channel_axis % t.ndim)
    s = np.max(np.abs(t), axis=axes) / 127.0
    return np.where(s > 0, s, 1.0)


def _broadcast(scales: np.ndarray, ndim: int, channel_axis):
    if scales.ndim == 0:
        return scales
    shape = [1] * ndim
    shape[channel_axis % ndim] = -1
    return scales.reshape(shape)


def quantize_int8(t, granularity: str = "per_tensor", channel_axis=None):
    """Symmetric INT8: scale max|t|/127 (per tensor or per channel), RNE, clamp to [-128, 127]."""
    t = np.asarray(t, dtype=np.float64)
    if t.size == 0:
        raise InvalidInputError("cannot quantize an empty tensor")
    if granularity not in GRANULARITIES:
        raise InvalidInputError(f"unknown granularity {granularity!r}")
    s = _scales(t, granularity, channel_axis)
    q = np.clip(np.rint(t / _broadcast(s, t.ndim, channel_axis)), -128, 127).astype(np.int8)
    return q, s


def dequantize(q, scales, channel_axis=None) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q * _broadcast(np.asarray(scales, dtype=np.float64), q.ndim, channel_axis)


def fake_int8(t, granularity: str = "per_tensor", channel_axis=0) -> np.ndarray:
    axis = channel_axis if granularity == "per_channel" else None
    q, s = quantize_int8(t, granularity, axis)
    return dequantize(q, s, axis)


@dataclass(frozen=True)
class QuantSpec:
    """How a tile is emulated.

    precision     fp16, int8, or fp32 (float32 everywhere, no rounding of inputs)
    granularity   int8 scale for At, G, Bt: one per tensor or one per row
    transforms    "quantized": At, G, Bt go through the same format as the operands;
                  "fp32": transforms stay float32 and, for int8, the transformed
                  kernel and tile are quantized instead
    """

    precision: str = "int8"
    granularity: str = "per_tensor"
    transforms: str = "quantized"
    accumulate: str = "f32"

    def __post_init__(self):
        if self.precision not in PRECISIONS:
            raise InvalidInputError(f"unknown precision {self.precision!r}")
        if self.granularity not in GRANULARITIES:
            raise InvalidInputError(f"unknown granularity {self.granularity!r}")
        if self.precision != "int8" and self.granularity != "per_tensor":
            raise InvalidInputError(f"{self.granularity} only applies to int8")
        if self.transforms not in TRANSFORM_MODES:
            raise InvalidInputError(f"unknown transform mode {self.transforms!r}")
        if self.accumulate != "f32":
            raise InvalidInputError("only float32 accumulation is supported")

    def label(self) -> str:
        parts = [self.precision]
        if self.precision == "int8":
            parts.append(self.granularity)
        if self.transforms != "quantized":
            parts.append(f"{self.transforms}-transforms")
        return "/".join(parts)


def direct_conv2d_f64(tile, kernel) -> np.ndarray:
    """Valid 2D correlation y[i,j] = sum_{k,l} g[k,l] d[i+k, j+l] in float64."""
    d = np.asarray(tile, dtype=np.float64)
    g = np.asarray(kernel, dtype=np.float64)
    if d.ndim != 2 or g.ndim != 2 or d.shape[0] != d.shape[1] or g.shape[0] != g.shape[1]:
        raise ShapeError("tile and kernel must be square matrices")
    r = g.shape[0]
    m = d.shape[0] - r + 1
    if m < 1:
        raise ShapeError(f"tile {d.shape} smaller than kernel {g.shape}")
    y = np.zeros((m, m))
    for k in range(r):
        for l in range(r):
            y += g[k, l] * d[k:k + m, l:l + m]
    return y


def winograd_tile_conv_quantized(triple_f64, tile, kernel, spec: QuantSpec) -> np.ndarray:
    at, g, bt = (np.asarray(x, dtype=np.float64) for x in triple_f64)
    m, n = at.shape
    r = g.shape[1]
    d = np.asarray(tile, dtype=np.float64)
    w = np.asarray(kernel, dtype=np.float64)
    if d.shape != (n, n) or w.shape != (r, r) or g.shape[0] != n or bt.shape != (n, n):
        raise ShapeError("tile, kernel and transform shapes disagree")
    f32 = np.float32
    if spec.precision == "fp16":
        if spec.transforms == "quantized":
            at, g, bt = round_fp16(at), round_fp16(g), round_fp16(bt)
        d, w = round_fp16(d), round_fp16(w)
    elif spec.precision == "int8":
        # per-channel scales apply to the transform rows (one row per output);
        # the tile and the single-channel kernel always use one scale each
        d, w = fake_int8(d), fake_int8(w)
        if spec.transforms == "quantized":
            at, g, bt = (fake_int8(t, spec.granularity, 0) for t in (at, g, bt))
    at, g, bt, d, w = (x.astype(f32) for x in (at, g, bt, d, w))
    with np.errstate(over="ignore", invalid="ignore"):
        u = g @ w @ g.T
        v = bt @ d @ bt.T
        if spec.precision == "int8" and spec.transforms == "fp32":
            u = fake_int8(u).astype(f32)
            v = fake_int8(v).astype(f32)
        y = at @ (u * v) @ at.T
    return y.astype(np.float64)


def _sample(seed: int, index: int, n: int, r: int, distribution: str):
    """Tile and kernel for one sample, resampling (rarely) when the reference is ~0."""
    attempt = 0
    while True:
        rng = stream(STREAM_HARNESS, seed, index, attempt)
        if distribution == "uniform":
            d = rng.uniform(-1.0, 1.0, (n, n))
            w = rng.uniform(-1.0, 1.0, (r, r))
        else:
            d = rng.standard_normal((n, n))
            w = rng.standard_normal((r, r))
        ref = direct_conv2d_f64(d, w)
        if np.linalg.norm(ref) >= L2_GUARD:
            return d, w, ref
        attempt += 1


@dataclass
class TileErrorReport:
    tile: tuple
    spec: QuantSpec
    samples: int
    seed: int
    mean_rel_l2: float
    median_rel_l2: float
    max_rel_l2: float
    saturated: int = 0
    distribution: str = "uniform"
    points: list | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tile"] = {"m": self.tile[0], "r": self.tile[1]}
        d["spec"] = asdict(self.spec)
        d["l2_guard"] = L2_GUARD
        return d


def _errors(config: PointConfiguration, spec: QuantSpec, samples: int, seed: int, distribution: str):
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    if distribution not in DISTRIBUTIONS:
        raise InvalidInputError(f"unknown distribution {distribution!r}")
    triple = construct_transforms(config).to_float64()
    n, r = config.n, config.r
    for i in range(samples):
        d, w, ref = _sample(seed, i, n, r, distribution)
        yield ref, winograd_tile_conv_quantized(triple, d, w, spec)


def measure_tile_error(config: PointConfiguration, spec: QuantSpec, samples: int = 100, seed: int = 0,
                       distribution: str = "uniform") -> TileErrorReport:
    errs = []
    saturated = 0
    for ref, y in _errors(config, spec, samples, seed, distribution):
        if not np.all(np.isfinite(y)):
            saturated += 1
            errs.append(1.0)
        else:
            errs.append(float(np.linalg.norm(y - ref) / np.linalg.norm(ref)))
    e = np.array(errs)
    return TileErrorReport(config.tile, spec, samples, seed, float(e.mean()), float(np.median(e)),
                           float(e.max()), saturated, distribution, config.point_strings())


@dataclass
class ScaleValidationReport:
    tile: tuple
    spec: QuantSpec
    samples: int
    seed: int
    standard_error: float
    discovered_error: float
    improvement_ratio: float
    elementwise_guard: float = ELEMENTWISE_GUARD

    @property
    def elementwise_rel_error_mean(self) -> dict:
        return {"standard": self.standard_error, "discovered": self.discovered_error}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tile"] = {"m": self.tile[0], "r": self.tile[1]}
        d["spec"] = asdict(self.spec)
        d["elementwise_rel_error_mean"] = self.elementwise_rel_error_mean
        return d


def _elementwise(config, spec, samples, seed, guard):
    total = 0.0
    for ref, y in _errors(config, spec, samples, seed, "uniform"):
        rel = np.abs(y - ref) / np.maximum(np.abs(ref), guard)
        rel[~np.isfinite(rel)] = 1.0
        total += float(rel.mean())
    return total / samples


def scale_validation(standard_config: PointConfiguration, discovered_config: PointConfiguration,
                     spec: QuantSpec, samples: int = 10_000, seed: int = 0,
                     guard: float = ELEMENTWISE_GUARD) -> ScaleValidationReport:
    """Paired element-wise relative error of two configurations on identical inputs."""
    if standard_config.tile != discovered_config.tile:
        raise InvalidInputError("both configurations must share a tile")
    es = _elementwise(standard_config, spec, samples, seed, guard)
    ed = _elementwise(discovered_config, spec, samples, seed, guard)
    ratio = es / ed if ed > 0 else (1.0 if es == 0 else float("inf"))
    return ScaleValidationReport(standard_config.tile, spec, samples, seed, es, ed, ratio, guard)
