import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biparam.errors import InvalidArgument
from biparam.grid import GridFn, build_product_grid, constant, integrate, sample, unit_rect
from biparam.oscillation import (
    FAMILIES,
    TestFn,
    avg_full,
    avg_x,
    avg_y,
    mixed_grad_field,
    one_block,
    oscillation,
    pi_R,
)

XY = TestFn("bilinear", {"cxy": 1.0})
SIN = TestFn("separable-trig", {"k1": 1.0, "k2": 1.0})
SMOOTH = [
    SIN,
    TestFn("separable-trig", {"k1": 2.0, "k2": 1.0, "amp": 0.5}),
    TestFn("polynomial", {"terms": [[1.0, 2, 3], [-0.5, 3, 1]]}),
    TestFn("random-bump-sum", {"n_bumps": 3, "width": 0.35}, seed=4),
]


@pytest.fixture
def sq():
    return build_product_grid(unit_rect(), 8, 8)


def test_constant_averages(sq):
    c = constant(sq, 3.5)
    np.testing.assert_allclose(avg_x(c).values, 3.5)
    np.testing.assert_allclose(avg_y(c).values, 3.5)
    assert avg_full(c) == pytest.approx(3.5)
    np.testing.assert_allclose(oscillation(c).values, 0.0, atol=1e-14)


def test_xy_averages(sq):
    f = sample(XY, sq)
    x, y = (a[..., 0] for a in sq.points())
    np.testing.assert_allclose(avg_x(f).values, np.broadcast_to(y / 2, sq.shape), rtol=1e-14)
    np.testing.assert_allclose(avg_y(f).values, np.broadcast_to(x / 2, sq.shape), rtol=1e-14)
    assert avg_full(f) == pytest.approx(0.25, rel=1e-14)
    np.testing.assert_allclose(pi_R(f).values, x / 2 + y / 2 - 0.25, atol=1e-15)
    np.testing.assert_allclose(oscillation(f).values, (x - 0.5) * (y - 0.5), atol=1e-15)


def test_single_block_functions_unchanged(sq):
    x, y = (a[..., 0] for a in sq.points())
    h = np.broadcast_to(np.exp(y), sq.shape)
    u = np.broadcast_to(np.cos(3 * x), sq.shape)
    np.testing.assert_allclose(avg_x(GridFn(sq, h)).values, h, rtol=1e-14)
    np.testing.assert_allclose(avg_y(GridFn(sq, u)).values, u, rtol=1e-14)
    for vals in (u, h, u + h):
        np.testing.assert_allclose(pi_R(GridFn(sq, vals)).values, vals, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), n1=st.sampled_from([1, 2]), n2=st.sampled_from([1, 2]))
def test_pi_R_projection(seed, n1, n2):
    g = build_product_grid(unit_rect(n1, n2, 1.5, 0.4), 4, 3)
    f = GridFn(g, np.random.default_rng(seed).standard_normal(g.shape))
    p = pi_R(f)
    np.testing.assert_allclose(pi_R(p).values, p.values, atol=1e-12)
    osc = oscillation(f)
    assert abs(integrate(osc)) < 1e-12
    np.testing.assert_allclose(avg_x(osc).values, 0.0, atol=1e-12)
    np.testing.assert_allclose(avg_y(osc).values, 0.0, atol=1e-12)


@pytest.mark.parametrize("kind", ["x", "y", "xy"])
def test_one_block_members(kind, sq):
    f = one_block(kind)
    assert f.is_one_block
    np.testing.assert_allclose(mixed_grad_field(f, sq).values, 0.0)
    np.testing.assert_allclose(oscillation(sample(f, sq)).values, 0.0, atol=1e-13)
    assert np.max(mixed_grad_field(f, sq, "finite-difference").values) < 1e-10


@pytest.mark.parametrize("n1,n2", [(1, 1), (2, 1), (2, 2)])
def test_xy_gradient_is_constant(n1, n2):
    g = build_product_grid(unit_rect(n1, n2), 5, 4)
    np.testing.assert_allclose(mixed_grad_field(XY, g).values, math.sqrt(n1 * n2), rtol=1e-15)
    fd = mixed_grad_field(XY, g, "finite-difference").values
    np.testing.assert_allclose(fd, math.sqrt(n1 * n2), rtol=1e-10)


def test_sin_gradient_exact(sq):
    x, y = (a[..., 0] for a in sq.points())
    expect = math.pi**2 * np.abs(np.cos(math.pi * x) * np.cos(math.pi * y))
    np.testing.assert_allclose(mixed_grad_field(SIN, sq).values, expect, rtol=1e-13, atol=1e-13)


def _fd_error(f, n, n1=1, n2=1):
    g = build_product_grid(unit_rect(n1, n2), n, n)
    return np.max(np.abs(mixed_grad_field(f, g, "finite-difference").values - mixed_grad_field(f, g).values))


@pytest.mark.parametrize("f", SMOOTH, ids=lambda f: f.family)
def test_fd_order(f):
    assert math.log2(_fd_error(f, 32) / _fd_error(f, 64)) >= 1.9


def test_fd_order_two_dim_block():
    f = TestFn("polynomial", {"terms": [[1.0, 3, 3]]})
    assert math.log2(_fd_error(f, 32, 2, 1) / _fd_error(f, 64, 2, 1)) >= 1.9


@pytest.mark.parametrize("f", SMOOTH, ids=lambda f: f.family)
def test_quadrature_order(f):
    ref = integrate(sample(f, build_product_grid(unit_rect(), 1024, 1024)))

    def err(n):
        return abs(integrate(sample(f, build_product_grid(unit_rect(), n, n))) - ref)

    assert math.log2(err(32) / err(64)) >= 1.9


def test_fd_needs_four_cells():
    g = build_product_grid(unit_rect(), 3, 8)
    with pytest.raises(InvalidArgument):
        mixed_grad_field(XY, g, "finite-difference")


def test_exact_needs_analytic(sq):
    with pytest.raises(InvalidArgument):
        mixed_grad_field(constant(sq, 1.0), sq)
    with pytest.raises(InvalidArgument):
        mixed_grad_field(XY, sq, "spectral")


def test_fd_accepts_grid_function(sq):
    a = mixed_grad_field(sample(SIN, sq), sq, "finite-difference").values
    np.testing.assert_array_equal(a, mixed_grad_field(SIN, sq, "finite-difference").values)


def test_rescaling(sq):
    f = SIN.rescaled(2.0, 0.5)
    x, y = (a[..., 0] for a in sq.points())
    np.testing.assert_allclose(sample(f, sq).values, np.sin(math.pi * x / 2) * np.sin(2 * math.pi * y), atol=1e-15)
    expect = math.pi**2 * np.abs(np.cos(math.pi * x / 2) * np.cos(2 * math.pi * y))
    np.testing.assert_allclose(mixed_grad_field(f, sq).values, expect, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("f", SMOOTH + [XY], ids=lambda f: f.family)
def test_roundtrip(f, sq):
    back = TestFn.from_dict(f.to_dict())
    np.testing.assert_array_equal(sample(back, sq).values, sample(f, sq).values)


def test_unknown_family():
    assert "bilinear" in FAMILIES
    with pytest.raises(InvalidArgument):
        TestFn("gaussian")
