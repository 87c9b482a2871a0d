import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biparam import oracles
from biparam.errors import InvalidArgument
from biparam.fractional import (
    KernelQuadRule,
    biparam_T,
    check_maxfrac_domination,
    kernel_matrix,
    riesz_slice,
    self_cell_weight,
    vertex_kernel,
)
from biparam.grid import GridFn, ProductGrid, build_product_grid, constant, integrate, sample, unit_rect
from conftest import load_fixture

SQUARE = 4 * math.log1p(math.sqrt(2))  # integral of 1/|u| over [-1/2, 1/2]^2


@pytest.mark.parametrize("name", ["T_12", "T_22"])
def test_T_matches_oracle_fixture(name):
    fx = load_fixture(f"{name}.oracle_T.json")
    g = GridFn(ProductGrid.from_dict(fx["grid"]), np.array(fx["input"]))
    rule = KernelQuadRule(fx["self_cell_depth"])
    np.testing.assert_allclose(biparam_T(g, rule, rule).values, fx["results"]["T"], rtol=1e-12)


def test_T_direct_double_sum_22(rng):
    g = build_product_grid(unit_rect(2, 2), 8, 8)
    vals = rng.standard_normal(g.shape)
    s = self_cell_weight(g.g1.h, 6)
    expect = oracles.biparam_T(vals, g, s, s)
    np.testing.assert_allclose(biparam_T(GridFn(g, vals)).values, expect, rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("n1,n2", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_composition_order(n1, n2, rng):
    g = build_product_grid(unit_rect(n1, n2), 6, 5)
    f = GridFn(g, rng.standard_normal(g.shape))
    xy = riesz_slice(riesz_slice(f, "y"), "x").values
    yx = riesz_slice(riesz_slice(f, "x"), "y").values
    np.testing.assert_allclose(xy, yx, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(biparam_T(f).values, xy, rtol=1e-15)


def test_one_dimensional_blocks_integrate(rng):
    g = build_product_grid(unit_rect(side1=2.0, side2=0.5), 7, 9)
    f = GridFn(g, rng.standard_normal(g.shape))
    np.testing.assert_allclose(biparam_T(f).values, integrate(f), rtol=1e-12)
    sx = riesz_slice(f, "x").values
    np.testing.assert_allclose(sx, np.broadcast_to(f.values.sum(axis=0) * g.g1.h, g.shape), rtol=1e-13)


def test_centre_of_square_oracle():
    errs = []
    for n in (15, 31, 63):
        g = build_product_grid(unit_rect(2, 1), n, 2)
        out = riesz_slice(constant(g, 1.0), "x").values[(n * n) // 2, 0]
        errs.append(abs(out - SQUARE) / SQUARE)
    assert errs[0] > errs[1] > errs[2]
    assert math.log2(errs[1] / errs[2]) > 0.9
    assert errs[2] < 2e-3


def test_self_cell_exact_value():
    for h in (1.0, 0.1, 1 / 64):
        assert self_cell_weight(h, 0) == pytest.approx(SQUARE * h, rel=1e-14)
        assert self_cell_weight(h, 6) == pytest.approx(SQUARE * h, rel=1e-6)


def test_self_cell_depth_convergence():
    g = build_product_grid(unit_rect(2, 1), 16, 3)
    f = sample(lambda x, y: np.cos(x[..., 0]) * np.exp(x[..., 1]) * (1 + y[..., 0]), g)
    a = riesz_slice(f, "x", KernelQuadRule(5)).values
    b = riesz_slice(f, "x", KernelQuadRule(6)).values
    assert np.max(np.abs(a - b)) < 1e-6


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), lam=st.floats(-4, 4), n1=st.sampled_from([1, 2]), n2=st.sampled_from([1, 2]))
def test_linearity_and_positivity(seed, lam, n1, n2):
    g = build_product_grid(unit_rect(n1, n2), 4, 3)
    r = np.random.default_rng(seed)
    a, b = r.standard_normal((2,) + g.shape)
    fa, fb = GridFn(g, a), GridFn(g, b)
    for op in (lambda u: riesz_slice(u, "x"), lambda u: riesz_slice(u, "y"), biparam_T):
        lhs = op(fa.like(a + lam * b)).values
        rhs = op(fa).values + lam * op(fb).values
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (1 + abs(lam)))
        assert np.all(op(fa.like(np.abs(a))).values >= 0)
        assert np.all(op(fa.like(np.zeros_like(a))).values == 0)


def test_maxfrac_constant_one_dim():
    g = build_product_grid(unit_rect(side1=3.0), 10, 4)
    assert check_maxfrac_domination(constant(g, 1.0), "x") == pytest.approx(1.0, rel=1e-13)


def test_maxfrac_scale_free(rng):
    g = build_product_grid(unit_rect(2, 1), 6, 3)
    f = GridFn(g, rng.random(g.shape))
    c = check_maxfrac_domination(f, "x")
    for lam in (1e-3, 7.0):
        assert check_maxfrac_domination(f.like(lam * f.values), "x") == pytest.approx(c, rel=1e-12)


def test_maxfrac_centre_cell_brute_force():
    g = build_product_grid(unit_rect(2, 1), 16, 2)
    v = np.zeros(g.shape)
    centre = 8 * 16 + 8
    v[centre, :] = 1.0
    f = GridFn(g, v)
    frac = oracles.biparam_T(v, g, self_cell_weight(g.g1.h, 6), 0.0) / (g.g2.h * 2)
    mx = oracles.slice_maximal(v, g, "x")
    expect = max(frac[i, 0] / mx[i, 0] for i in range(g.shape[0]) if mx[i, 0] > 0)
    assert check_maxfrac_domination(f, "x") == pytest.approx(expect, rel=1e-12)


def test_maxfrac_rejects_negative(grid_factory):
    g = grid_factory(cells1=4)
    with pytest.raises(InvalidArgument):
        check_maxfrac_domination(constant(g, -1.0), "x")


def test_maxfrac_zero_input(grid_factory):
    assert check_maxfrac_domination(constant(grid_factory(cells1=4), 0.0), "y") == 0.0


@pytest.mark.parametrize("kw", [{"self_cell_depth": -1}, {"self_cell_depth": 9}, {"block_dim": 3}])
def test_rule_validation(kw):
    with pytest.raises(InvalidArgument):
        KernelQuadRule(**kw)


def test_rule_block_dim_mismatch(grid_factory):
    g = grid_factory(n1=2, cells1=3)
    with pytest.raises(InvalidArgument):
        riesz_slice(constant(g, 1.0), "x", KernelQuadRule(block_dim=1))


def test_kernel_symmetric_positive():
    g = build_product_grid(unit_rect(2, 1), 5, 2)
    k = kernel_matrix(g.g1)
    np.testing.assert_array_equal(k, k.T)
    assert np.all(k > 0)
    assert np.argmax(k[7]) == 7


def test_vertex_kernel_shapes_and_corner_value():
    g = build_product_grid(unit_rect(2, 1), 4, 3)
    k = vertex_kernel(g.g1)
    assert k.shape == (25, 16)
    h = g.g1.h
    # Vertex (0, 0) touches only cell 0.
    assert k[0, 0] == pytest.approx(2 * h * math.log1p(math.sqrt(2)), rel=1e-14)
    assert k[0, 5] == pytest.approx(h * h / math.hypot(1.5 * h, 1.5 * h), rel=1e-14)
    one = vertex_kernel(g.g2)
    assert one.shape == (4, 3) and np.all(one == g.g2.h)
