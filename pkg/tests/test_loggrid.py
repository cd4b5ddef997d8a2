import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hadamard import (LogGrid, PiecewiseFn, QuadrantFn, align_grid, as_piecewise, decay_norm,
                      default_grid, edge_band, edge_mask, grid_from_window, l1_exponent,
                      make_grid, quadrants, radial_weight, sample, sample_piecewise, sigma,
                      to_linear, to_log, trapezoid_weights, weight_omega, weighted_edge_ratio)

from conftest import log_bump

finite = st.floats(-30, 30, allow_nan=False)


def test_quadrants_order_and_sigma():
    assert quadrants(1) == [(1,), (-1,)]
    assert quadrants(2) == [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    assert [sigma(e) for e in quadrants(2)] == [1, -1, -1, 1]


def test_grid_validation():
    with pytest.raises(ValueError):
        make_grid(1, [0.0], [0.0], [16])
    with pytest.raises(ValueError):
        make_grid(1, [0.0], [0.1], [4])
    with pytest.raises(ValueError):
        make_grid(1, [690.0], [1.0], [32])
    with pytest.raises(ValueError):
        make_grid(2, [0.0], [0.1], [16])
    with pytest.raises(ValueError):
        grid_from_window(1, 1.0, 1.0, 16)


def test_default_grid_matches_cli_defaults():
    g1, g2 = default_grid(1), default_grid(2)
    assert g1.n == (1024,) and g1.window() == [(-6.0, 6.0)]
    assert g2.n == (128, 128)
    assert g2.window()[1][1] == pytest.approx(6.0)


def test_grid_dict_roundtrip():
    g = default_grid(2)
    assert LogGrid.from_dict(g.to_dict()) == g
    with pytest.raises(ValueError):
        LogGrid.from_dict({**g.to_dict(), "extra": 1})


def test_align_grid_puts_log2_on_nodes():
    for dim in (1, 2):
        g = align_grid(default_grid(dim))
        steps = math.log(2.0) / g.dt[0]
        assert steps == pytest.approx(round(steps), abs=1e-9)
        center = g.t0[0] + 0.5 * (g.n[0] - 1) * g.dt[0]
        assert center == pytest.approx(0.0, abs=1e-12)


def test_edge_mask_and_trapezoid():
    g = grid_from_window(2, -1.0, 1.0, 40)
    mask = edge_mask(g)
    b = edge_band(40)
    assert mask[:b].all() and mask[-b:].all() and not mask[b:-b, b:-b].any()
    w = trapezoid_weights(g)
    assert w.sum() == pytest.approx(4.0)
    assert w[0, 0] == pytest.approx(0.25 * g.dt[0] ** 2)


def test_quadrant_fn_is_read_only_and_finite(grid1):
    f = sample(log_bump(), grid1)
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        QuadrantFn(grid1, (1,), np.full(grid1.shape, np.nan))


def test_sample_reports_bad_node():
    g = grid_from_window(1, -1.0, 1.0, 16)
    with pytest.raises(ValueError, match="node"):
        sample(lambda x: 1.0 / (x - x[3]), g)


def test_sampling_is_exact(grid1):
    fn = lambda x: np.cos(x) / (1 + x * x)  # noqa: E731
    for e in quadrants(1):
        f = sample(fn, grid1, e)
        assert np.array_equal(f.values, fn(grid1.points(e)[0]))


@given(st.integers(0, 2**32 - 1), st.sampled_from([(1,), (-1,)]))
def test_log_roundtrip_bit_exact(seed, e):
    g = grid_from_window(1, -3.0, 3.0, 64)
    vals = np.random.default_rng(seed).normal(size=64)
    f = QuadrantFn(g, e, vals)
    back = to_linear(to_log(f))
    assert back.quadrant == f.quadrant and np.array_equal(back.values, f.values)


def test_piecewise_fills_missing_quadrants(grid2):
    f = sample(log_bump(), grid2, (1, -1))
    p = as_piecewise(f)
    assert set(p.parts) == set(quadrants(2))
    assert not p[(1, 1)].values.any()
    assert np.array_equal(p[(1, -1)].values, f.values)
    q = sample_piecewise(log_bump(), grid2)
    assert all(q[e].values.max() > 0.9 for e in quadrants(2))
    with pytest.raises(ValueError):
        PiecewiseFn.from_arrays(grid2, {(1, 1): np.zeros(3)})


def test_integral_against_closed_form(grid1):
    # int_0^inf exp(-(log x)^2 / 2w^2) dx = w sqrt(2 pi) exp(w^2 / 2)
    w = 0.4
    f = sample(log_bump(0.0, w), grid1)
    assert f.integral() == pytest.approx(w * math.sqrt(2 * math.pi) * math.exp(w * w / 2),
                                         rel=1e-12)


@given(st.lists(finite, min_size=1, max_size=3), st.sampled_from([1, 2, 5]))
def test_omega_bounds_exact(x, k):
    d = len(x)
    lo = float(np.exp(k * l1_exponent(np.array(x))))
    w = weight_omega(x, k)
    assert lo <= w <= 2 ** d * lo


def test_omega_at_origin_and_overflow():
    assert weight_omega([0.0, 0.0], 3) == 4.0
    with pytest.raises(OverflowError):
        weight_omega([400.0], 5)
    with pytest.raises(ValueError):
        weight_omega([1.0], 0)


def test_omega_batch_matches_pointwise():
    x = np.random.default_rng(1).normal(size=(20, 2))
    batch = weight_omega(x, 2)
    assert np.array_equal(batch, [weight_omega(row, 2) for row in x])


def test_decay_norm_k0_is_twice_sup():
    g = grid_from_window(1, -0.7, 0.7, 64)
    f = sample(lambda x: np.exp(-(np.log(x) ** 2) * 20.0), g)
    assert decay_norm(f, 0) == pytest.approx(2 * np.abs(f.values).max())


@given(st.integers(0, 2**32 - 1))
def test_decay_norm_monotone_outside_unit_ball(seed):
    g = grid_from_window(1, 0.0, 3.0, 64)
    vals = np.abs(np.random.default_rng(seed).normal(size=64))
    f = QuadrantFn(g, (1,), vals)
    norms = [decay_norm(f, k) for k in range(5)]
    assert all(b >= a for a, b in zip(norms, norms[1:]))


def test_radial_weight_uses_euclidean_norm():
    g = grid_from_window(2, -1.0, 1.0, 9)
    r2 = np.exp(2 * g.mesh()[0]) + np.exp(2 * g.mesh()[1])
    assert np.allclose(radial_weight(g, 1), r2 + 1 / r2, rtol=1e-15)


def test_weighted_edge_ratio():
    g = grid_from_window(1, -1.0, 1.0, 100)
    v = np.zeros(100)
    v[50] = 2.0
    v[1] = 1.0
    assert weighted_edge_ratio(v, g) == 0.5
    assert weighted_edge_ratio(np.zeros(100), g) == 0.0
