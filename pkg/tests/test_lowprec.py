import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from winpoint import catalog
from winpoint.cooktoom import construct_transforms, standard_config, winograd_apply_2d, winograd_apply_2d_exact
from winpoint.errors import InvalidInputError, ShapeError
from winpoint.lowprec import (
    QuantSpec,
    dequantize,
    direct_conv2d_f64,
    measure_tile_error,
    quantize_int8,
    round_fp16,
    scale_validation,
    winograd_tile_conv_quantized,
)

from oracles import exact_correlation_2d, fp16_round_oracle

INT8 = QuantSpec("int8", "per_tensor")


def cfg(name):
    return catalog.get(name).config


# binary16 rounding

def test_round_fp16_examples():
    assert round_fp16(1.0) == 1.0
    assert round_fp16(5 / 6) != 5 / 6
    assert round_fp16(2.0 ** -24) == 2.0 ** -24
    assert round_fp16(2.0 ** -26) == 0.0
    assert round_fp16(65504.0) == 65504.0
    assert round_fp16(1e6) == math.inf


@settings(max_examples=500, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-7e4, max_value=7e4))
def test_round_fp16_matches_oracle(x):
    assert round_fp16(x) == fp16_round_oracle(x)


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-6e4, max_value=6e4))
def test_round_fp16_idempotent(x):
    y = round_fp16(x)
    assert round_fp16(y) == y


def test_round_fp16_ties_to_even():
    one_ulp = 2.0 ** -10
    assert round_fp16(1 + one_ulp / 2) == 1.0
    assert round_fp16(1 + 3 * one_ulp / 2) == 1 + 2 * one_ulp


# INT8

def test_quantize_examples():
    q, s = quantize_int8([0.0, 0.5, -1.0])
    assert float(s) == pytest.approx(1 / 127)
    assert q.tolist() == [0, 64, -127]  # 63.5 rounds to even
    q, s = quantize_int8(np.zeros(4))
    assert float(s) == 1.0 and not q.any()
    assert np.array_equal(dequantize(q, s), np.zeros(4))
    w = np.array([[1.0, -0.5], [0.1, 0.05]])
    q, s = quantize_int8(w, "per_channel", channel_axis=0)
    assert np.allclose(s, [1 / 127, 0.1 / 127])
    with pytest.raises(InvalidInputError):
        quantize_int8(w, "per_channel")


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (4, 5), elements=st.floats(-100, 100)))
def test_quantizer_half_step_bound(t):
    q, s = quantize_int8(t)
    assert np.all(np.abs(dequantize(q, s) - t) <= float(s) / 2 * (1 + 1e-12))
    q, s = quantize_int8(t, "per_channel", channel_axis=0)
    err = np.abs(dequantize(q, s, 0) - t)
    assert np.all(err <= s[:, None] / 2 * (1 + 1e-12))


# direct convolution and oracle agreement

def test_direct_conv_examples():
    rng = np.random.default_rng(0)
    tile = rng.standard_normal((6, 6))
    delta = np.zeros((3, 3))
    delta[0, 0] = 1
    assert np.array_equal(direct_conv2d_f64(tile, delta), tile[:4, :4])
    assert np.all(direct_conv2d_f64(np.ones((4, 4)), np.ones((3, 3))) == 9.0)
    with pytest.raises(ShapeError):
        direct_conv2d_f64(np.ones((2, 2)), np.ones((3, 3)))


def test_direct_conv_matches_exact_oracle():
    rng = np.random.default_rng(2)
    tile, kern = rng.uniform(-1, 1, (8, 8)), rng.uniform(-1, 1, (3, 3))
    ref = np.array(exact_correlation_2d(tile, kern), dtype=float)
    assert np.allclose(direct_conv2d_f64(tile, kern), ref, rtol=0, atol=1e-14)


# float64 round-off of these two ill-conditioned standard sets reaches ~5e-10 on some inputs
FLOAT64_LOOSE = {"std-F83", "std-F65"}


@pytest.mark.parametrize("name", sorted(catalog.CATALOG))
def test_full_precision_oracle_agreement(name):
    c = cfg(name)
    triple = construct_transforms(c)
    t = triple.to_float64()
    rng = np.random.default_rng(5)
    for _ in range(5):
        tile = rng.uniform(-1, 1, (c.n, c.n))
        kern = rng.uniform(-1, 1, (c.r, c.r))
        ref = direct_conv2d_f64(tile, kern)
        exact = winograd_apply_2d_exact(triple, [[Fraction(float(v)) for v in row] for row in kern],
                                        [[Fraction(float(v)) for v in row] for row in tile]).to_float64()
        assert np.linalg.norm(exact - ref) / np.linalg.norm(ref) < 1e-10
        err64 = np.linalg.norm(winograd_apply_2d(t, kern, tile) - ref) / np.linalg.norm(ref)
        assert err64 < (1e-8 if name in FLOAT64_LOOSE else 1e-10)


def test_float64_path_limit_on_standard_f83():
    # documents why FLOAT64_LOOSE exists: some inputs cross 1e-10 in float64
    c = standard_config(8, 3)
    t = construct_transforms(c).to_float64()
    worst = 0.0
    for s in range(200):
        rng = np.random.default_rng(s)
        tile, kern = rng.uniform(-1, 1, (c.n, c.n)), rng.uniform(-1, 1, (c.r, c.r))
        ref = direct_conv2d_f64(tile, kern)
        worst = max(worst, np.linalg.norm(winograd_apply_2d(t, kern, tile) - ref) / np.linalg.norm(ref))
    assert 1e-10 < worst < 1e-8


def test_zero_tile_gives_zero():
    t = construct_transforms(cfg("disc-F43")).to_float64()
    for spec in (INT8, QuantSpec("fp16")):
        y = winograd_tile_conv_quantized(t, np.zeros((6, 6)), np.ones((3, 3)), spec)
        assert np.all(y == 0)


def test_quant_spec_validation():
    with pytest.raises(InvalidInputError):
        QuantSpec("fp16", "per_channel")
    with pytest.raises(InvalidInputError):
        QuantSpec("int4")
    with pytest.raises(InvalidInputError):
        QuantSpec(accumulate="f16")


# tile error

def test_measure_reproducible_single_sample():
    a = measure_tile_error(cfg("disc-F43"), INT8, samples=1, seed=9)
    b = measure_tile_error(cfg("disc-F43"), INT8, samples=1, seed=9)
    assert a.to_dict() == b.to_dict()
    with pytest.raises(InvalidInputError):
        measure_tile_error(cfg("disc-F43"), INT8, samples=0)


def test_int8_f63_regimes():
    std = measure_tile_error(standard_config(6, 3), INT8, samples=100, seed=0)
    disc = measure_tile_error(cfg("disc-F63"), INT8, samples=100, seed=0)
    assert std.mean_rel_l2 > 1
    assert 0.06 <= disc.mean_rel_l2 <= 0.25
    assert 0 <= disc.median_rel_l2 <= disc.max_rel_l2


def test_int8_f43_tracks_sqrt_kappa_band():
    std = measure_tile_error(standard_config(4, 3), INT8, samples=100, seed=0).mean_rel_l2
    disc = measure_tile_error(cfg("disc-F43"), INT8, samples=100, seed=0).mean_rel_l2
    assert 1.5 <= std / disc <= 7


def test_per_channel_not_worse_for_discovered_f43():
    pt = measure_tile_error(cfg("disc-F43"), INT8, samples=100, seed=0).mean_rel_l2
    pc = measure_tile_error(cfg("disc-F43"), QuantSpec("int8", "per_channel"), samples=100, seed=0).mean_rel_l2
    assert pc <= pt


def test_f83_standard_saturates_or_breaks():
    rep = measure_tile_error(standard_config(8, 3), INT8, samples=20, seed=0)
    assert rep.mean_rel_l2 >= 0.99


def test_saturated_samples_counted(monkeypatch):
    import winpoint.lowprec as lp
    monkeypatch.setattr(lp, "winograd_tile_conv_quantized", lambda *a: np.full((2, 2), np.inf))
    rep = lp.measure_tile_error(cfg("std-F23"), INT8, samples=3, seed=0)
    assert rep.saturated == 3 and rep.mean_rel_l2 == 1.0


@pytest.mark.xfail(strict=True, reason="measured ~1.9e-3 for fp16 disc-F43; see README known deviations")
def test_fp16_disc_f43_reference_magnitude():
    rep = measure_tile_error(cfg("disc-F43"), QuantSpec("fp16"), samples=100, seed=0)
    assert abs(rep.mean_rel_l2 - 5.6e-4) / 5.6e-4 < 0.5


# scale validation

def test_scale_validation_identity_and_guard():
    rep = scale_validation(cfg("disc-F43"), cfg("disc-F43"), INT8, samples=50)
    assert rep.improvement_ratio == 1.0
    assert rep.to_dict()["elementwise_guard"] == 1e-30
    with pytest.raises(InvalidInputError):
        scale_validation(cfg("disc-F43"), cfg("disc-F63"), INT8, samples=5)


def test_scale_validation_f63():
    rep = scale_validation(standard_config(6, 3), cfg("disc-F63"), QuantSpec("int8", "per_channel"))
    assert rep.improvement_ratio >= 1e3
    assert rep.improvement_ratio == pytest.approx(rep.standard_error / rep.discovered_error)


@pytest.mark.xfail(strict=True, reason="seeds 1 and 2 give ~3.9e2 and ~3.3e2; the metric is tail dominated")
@pytest.mark.parametrize("seed", [1, 2])
def test_scale_validation_f63_other_seeds(seed):
    rep = scale_validation(standard_config(6, 3), cfg("disc-F63"), QuantSpec("int8", "per_channel"), seed=seed)
    assert rep.improvement_ratio >= 1e3


@pytest.mark.xfail(strict=True, reason="F(4,3) element-wise ratio measures ~0.4-1.0; see README known deviations")
def test_scale_validation_f43_fp32_transforms():
    spec = QuantSpec("int8", "per_channel", transforms="fp32")
    rep = scale_validation(standard_config(4, 3), cfg("disc-F43"), spec)
    assert rep.improvement_ratio >= 50
