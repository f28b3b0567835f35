from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from winpoint import catalog
from winpoint.cooktoom import (
    PointConfiguration,
    TransformTriple,
    build_vandermonde,
    config_from_dict,
    construct_transforms,
    convolution_tensor,
    direct_correlation_exact,
    export_dict,
    kron_expand,
    lagrange_factors,
    standard_config,
    triple_from_dict,
    verify_exact,
    winograd_apply_2d,
    winograd_apply_2d_exact,
    winograd_apply_exact,
)
from winpoint.errors import DuplicatePointError, InvalidConfigurationError, ResourceLimitError, ShapeError
from winpoint.exact import RationalMatrix

from oracles import dense_kron, exact_correlation_2d

F = Fraction


def cfg(m, r, *pts):
    return PointConfiguration(m, r, tuple(F(p) for p in pts))


# Vandermonde and Lagrange factors

def test_build_vandermonde_examples():
    assert build_vandermonde([F(0), F(1), F(-1)], 3) == RationalMatrix([[1, 0, 0], [1, 1, 1], [1, -1, 1]])
    assert build_vandermonde([F(0)], 1) == RationalMatrix([[1]])
    V = build_vandermonde([F(0), F(1), F(-1), F(2), F(-2)], 5)
    assert V.row(3) == tuple(F(v) for v in (1, 2, 4, 8, 16))


def test_build_vandermonde_infinity_row_and_duplicates():
    V = build_vandermonde([F(0), F(1)], 3, with_infinity_row=True)
    assert V.shape == (3, 3)
    assert V.row(2) == (0, 0, 1)
    with pytest.raises(DuplicatePointError):
        build_vandermonde([F(1), F(1)], 2)


def test_lagrange_factors_examples():
    assert lagrange_factors([F(0), F(1), F(-1)]) == [-1, 2, 2]
    assert lagrange_factors([F(0)]) == [1]
    assert lagrange_factors([F(1, 2), F(-1, 2)]) == [1, -1]
    with pytest.raises(DuplicatePointError):
        lagrange_factors([F(2), F(2)])


# convolution tensor

def test_convolution_tensor_examples():
    T = convolution_tensor(2, 3)
    assert T.entry(0, 0, 0) == 1 and T.entry(1, 2, 3) == 1 and T.entry(0, 2, 1) == 0
    assert convolution_tensor(1, 1).to_numpy().tolist() == [[[1.0]]]


@given(st.integers(1, 8), st.integers(1, 6))
def test_convolution_tensor_ones(m, r):
    assert convolution_tensor(m, r).to_numpy().sum() == m * r


# construction and verification

def test_standard_f23_triple():
    triple = construct_transforms(cfg(2, 3, 0, 1, -1))
    assert verify_exact(triple, 2, 3).exact_zero
    row = list(triple.bt.row(3))
    assert row in ([0, -1, 0, 1], [0, 1, 0, -1])
    assert triple.at == RationalMatrix([[1, 1, 1, 0], [0, 1, -1, 1]])
    assert triple.g.row(0) == (-1, 0, 0)
    assert triple.g.row(1) == (F(1, 2), F(1, 2), F(1, 2))


def test_max_entry_reduction_f43():
    # coefficient magnitudes of the output transform: ~1.6 for the discovered set vs 8 for integers
    std = construct_transforms(standard_config(4, 3)).at.max_abs()
    disc = construct_transforms(catalog.get("disc-F43").config).at.max_abs()
    assert std == 8
    assert disc == F(7, 6) ** 3
    assert abs(float(disc) - 1.6) < 0.05


def test_perturbed_triple_fails():
    t = construct_transforms(cfg(2, 3, 0, 1, -1))
    rows = [list(r) for r in t.at.tolist()]
    rows[0][1] += 1
    bad = TransformTriple(RationalMatrix(rows), t.g, t.bt)
    rep = verify_exact(bad, 2, 3)
    assert not rep.exact_zero
    prods = [abs(t.g[p, k] * t.bt[p, j]) for p in range(4) for k in range(3) for j in range(4)]
    assert rep.max_residual >= min(x for x in prods if x)
    assert rep.checked_entries == 2 * 3 * 4


def test_verify_shape_mismatch():
    t = construct_transforms(cfg(2, 3, 0, 1, -1))
    with pytest.raises(ShapeError):
        verify_exact(t, 4, 3)


@pytest.mark.parametrize("name", ["disc-F23", "disc-F43", "disc-F63", "disc-F83"])
def test_catalog_discovered_verify(name):
    e = catalog.get(name)
    assert verify_exact(construct_transforms(e.config), *e.tile).exact_zero


def test_configuration_validation():
    with pytest.raises(DuplicatePointError):
        cfg(2, 3, 0, 1, 1)
    with pytest.raises(InvalidConfigurationError):
        cfg(2, 3, 0, 1)
    with pytest.raises(InvalidConfigurationError):
        PointConfiguration(0, 3, ())


@st.composite
def distinct_points(draw):
    k = draw(st.integers(1, 9))
    pts = draw(st.lists(st.builds(F, st.integers(-30, 30), st.integers(1, 6)), min_size=k, max_size=k, unique=True))
    r = draw(st.integers(1, k + 1))
    m = k + 2 - r
    return m, r, pts


@settings(max_examples=200, deadline=None)
@given(distinct_points())
def test_construct_then_verify(data):
    m, r, pts = data
    triple = construct_transforms(PointConfiguration(m, r, tuple(pts)))
    assert verify_exact(triple, m, r).exact_zero


@settings(max_examples=40, deadline=None)
@given(distinct_points(), st.randoms(use_true_random=False))
def test_permutation_invariance(data, rnd):
    m, r, pts = data
    perm = list(pts)
    rnd.shuffle(perm)
    t1 = construct_transforms(PointConfiguration(m, r, tuple(pts)))
    t2 = construct_transforms(PointConfiguration(m, r, tuple(perm)))
    assert verify_exact(t2, m, r).exact_zero
    # columns of At follow the points
    idx = [pts.index(p) for p in perm] + [len(pts)]
    assert all(t2.at.column(c) == t1.at.column(idx[c]) for c in range(len(idx)))


@settings(max_examples=40, deadline=None)
@given(distinct_points(), st.data())
def test_exact_winograd_equals_direct_correlation(data, draw):
    m, r, pts = data
    n = m + r - 1
    triple = construct_transforms(PointConfiguration(m, r, tuple(pts)))
    small = st.builds(F, st.integers(-20, 20), st.integers(1, 7))
    g = draw.draw(st.lists(small, min_size=r, max_size=r))
    d = draw.draw(st.lists(small, min_size=n, max_size=n))
    assert winograd_apply_exact(triple, g, d) == direct_correlation_exact(g, d, m)


# Kronecker expansion

def test_kron_expand_dims_and_entries():
    t = construct_transforms(standard_config(4, 3))
    k = kron_expand(t)
    assert k.at.shape == (16, 36)
    assert k.g.shape == (36, 9) and k.bt.shape == (36, 36)
    assert k.at[0, 0] == t.at[0, 0] ** 2
    assert np.array_equal(k.at.to_float64(), dense_kron(t.at.to_float64(), t.at.to_float64()))
    with pytest.raises(ResourceLimitError):
        kron_expand(t, max_entries=100)


def test_kron_entries_exact():
    t = construct_transforms(catalog.get("disc-F43").config)
    k = kron_expand(t)
    A = t.at
    for i in range(A.rows):
        for j in range(A.cols):
            for p in range(A.rows):
                for q in range(A.cols):
                    assert k.at[i * A.rows + p, j * A.cols + q] == A[i, j] * A[p, q]


def test_exact_2d_matches_oracle():
    rng = np.random.default_rng(3)
    t = construct_transforms(catalog.get("disc-F43").config)
    d = rng.integers(-9, 10, (6, 6))
    g = rng.integers(-9, 10, (3, 3))
    y = winograd_apply_2d_exact(t, g.tolist(), d.tolist())
    assert y.tolist() == exact_correlation_2d(d, g)


# float 2D evaluation

def test_winograd_2d_zero_and_delta():
    t = construct_transforms(standard_config(2, 3)).to_float64()
    tile = np.arange(16.0).reshape(4, 4)
    assert np.all(winograd_apply_2d(t, np.zeros((3, 3)), tile) == 0)
    delta = np.zeros((3, 3))
    delta[0, 0] = 1
    assert np.allclose(winograd_apply_2d(t, delta, tile), tile[:2, :2], atol=1e-12)


@pytest.mark.parametrize("name", sorted(catalog.CATALOG))
def test_winograd_2d_matches_direct(name):
    e = catalog.get(name)
    t = construct_transforms(e.config).to_float64()
    rng = np.random.default_rng(11)
    n, r = e.config.n, e.config.r
    tile = rng.uniform(-1, 1, (n, n))
    kern = rng.uniform(-1, 1, (r, r))
    ref = np.array(exact_correlation_2d(tile, kern), dtype=float)
    y = winograd_apply_2d(t, kern, tile)
    assert np.linalg.norm(y - ref) / np.linalg.norm(ref) < 1e-10
    with pytest.raises(ShapeError):
        winograd_apply_2d(t, kern, tile[:-1])


# export document

def test_export_round_trip():
    e = catalog.get("disc-F43")
    t = construct_transforms(e.config)
    doc = export_dict(e.config, t)
    assert doc["points"] == ["0", "5/6", "-5/6", "7/6", "-7/6"]
    assert config_from_dict(doc) == e.config
    assert triple_from_dict(doc) == t
    assert triple_from_dict({"tile": {"m": 4, "r": 3}, "points": []}) is None
