"""Field evaluation plans, spacetime grids and regions."""

import numpy as np
import pytest

from eventloc.engine import (
    EventRegion,
    evaluate_field,
    oracle_direct_field,
    spacetime_grid,
    time_radial_grid,
)
from eventloc.grids import energy_grid_1d, shell_grid_2d
from eventloc.kernels import make_kernel, random_isometric_kernel
from eventloc.states import make_test_state


def _case1(rule="uniform"):
    g = energy_grid_1d(0.8, 6.8, 48, rule=rule)
    k = make_kernel(g, {"kind": "dft", "n_sigma": 2, "n_gamma": 3,
                        "phase_coeffs": [0.0, 0.7, -0.4]})
    psi = make_test_state(g, {"family": "gaussian", "center": 3.5,
                              "width": 0.4, "channel_weights": [0.8, 0.6]})
    return g, k, psi


def _case2():
    g = shell_grid_2d((0.5, 2.5), 20, 1.2, 40, rule="uniform")
    k = make_kernel(g, {"kind": "dft", "n_sigma": 2, "n_gamma": 2,
                        "q_values": [0.8, 1.5], "phase_coeffs": [0.3, -0.6]})
    psi = make_test_state(g, {"family": "gaussian", "center": [1.4, 0.0],
                              "width": [0.25, 0.3],
                              "channel_weights": [1.0, 0.7]})
    return g, k, psi


# -- spacetime grids -----------------------------------------------------


def test_spacetime_grid_basics():
    grid = spacetime_grid([(-2.0, 2.0), (-3.0, 3.0)], [5, 7])
    assert grid.dim == 2
    assert grid.shape == (5, 7)
    assert grid.bounds == ((-2.0, 2.0), (-3.0, 3.0))
    assert abs(np.sum(grid.weights()) - 4.0 * 6.0) < 1e-12
    assert grid.points().shape == (35, 2)


def test_spacetime_grid_rejects_nonuniform():
    with pytest.raises(ValueError, match="uniform"):
        from eventloc.engine import SpacetimeGrid
        SpacetimeGrid((np.array([0.0, 1.0, 3.0]),))


def test_time_radial_grid():
    dom = time_radial_grid(-4.0, 4.0, 16, 6.0, 24)
    assert dom.t_nodes.size == 16 and dom.r_nodes.size == 24
    # gauss nodes stay inside the requested radius
    assert dom.r_nodes[-1] <= 6.0
    assert dom.r_max == dom.r_nodes[-1]
    assert np.all(dom.r_weights > 0) and np.all(dom.t_weights > 0)
    # the radial rule integrates r^2 exactly: int_0^R r^2 dr = R^3/3
    got = float(np.sum(dom.r_weights * dom.r_nodes**2))
    assert abs(got - 6.0**3 / 3.0) < 1e-10


# -- evaluation strategies ----------------------------------------------


def test_d1_fft_matches_direct():
    g, k, psi = _case1()
    box = spacetime_grid([(-10.0, 10.0)], [64])
    f_direct = evaluate_field(psi, k, box, strategy="direct")
    f_fft = evaluate_field(psi, k, box, strategy="fft")
    scale = np.max(np.abs(f_direct.values))
    assert np.max(np.abs(f_direct.values - f_fft.values)) < 1e-13 * scale


def test_d2_fft_matches_direct():
    g, k, psi = _case2()
    box = spacetime_grid([(-8.0, 8.0), (-8.0, 8.0)], [48, 48])
    f_direct = evaluate_field(psi, k, box, strategy="direct")
    f_fft = evaluate_field(psi, k, box, strategy="fft")
    scale = np.max(np.abs(f_direct.values))
    assert np.max(np.abs(f_direct.values - f_fft.values)) < 1e-12 * scale


def test_fft_refused_on_gauss_nodes():
    g, k, psi = _case1(rule="gauss")
    box = spacetime_grid([(-10.0, 10.0)], [64])
    with pytest.raises(ValueError, match="fast transform"):
        evaluate_field(psi, k, box, strategy="fft")
    # auto falls back to the direct plan silently
    f = evaluate_field(psi, k, box, strategy="auto")
    assert f.values.shape == (k.n_gamma, 64)


def test_nyquist_guard():
    g, k, psi = _case1()
    # energy bandwidth 6 caps the time spacing at 2 pi / 6
    coarse = spacetime_grid([(-10.0, 10.0)], [10])
    with pytest.raises(ValueError, match="undersamples"):
        evaluate_field(psi, k, coarse)


def test_evaluate_at_matches_grid_nodes():
    g, k, psi = _case2()
    box = spacetime_grid([(-6.0, 6.0), (-6.0, 6.0)], [24, 24])
    field = evaluate_field(psi, k, box)
    pts = box.points()[[0, 100, 311, 575]]
    vals = field.evaluate_at(pts)
    flat = field.values.reshape(k.n_gamma, -1)[:, [0, 100, 311, 575]]
    np.testing.assert_allclose(vals, flat, atol=1e-13)


def test_evaluate_at_rejects_wrong_width():
    g, k, psi = _case1()
    box = spacetime_grid([(-10.0, 10.0)], [64])
    field = evaluate_field(psi, k, box)
    with pytest.raises(ValueError, match="coordinates"):
        field.evaluate_at(np.zeros((3, 2)))


def test_points_evaluation_vs_oracle_d1():
    g, k, psi = _case1()
    pts = np.array([[0.0], [1.7], [-4.2], [9.4]])
    field = evaluate_field(psi, k, pts)
    want = oracle_direct_field(psi, k, pts)
    np.testing.assert_allclose(field.values, want, atol=1e-10)


def test_points_evaluation_vs_oracle_d2():
    g, k, psi = _case2()
    rng = np.random.default_rng(2)
    pts = rng.uniform(-5.0, 5.0, size=(6, 2))
    field = evaluate_field(psi, k, pts)
    want = oracle_direct_field(psi, k, pts)
    np.testing.assert_allclose(field.values, want, atol=1e-10)


def test_unknown_strategy():
    g, k, psi = _case1()
    box = spacetime_grid([(-10.0, 10.0)], [64])
    with pytest.raises(ValueError, match="strategy"):
        evaluate_field(psi, k, box, strategy="magic")


# -- regions -------------------------------------------------------------


def test_region_rejects_overlap():
    with pytest.raises(ValueError, match="overlap"):
        EventRegion(np.array([[0.0], [0.5]]), np.array([[1.0], [1.5]]))


def test_region_membership_half_open():
    r = EventRegion.box([0.0, 0.0], [1.0, 1.0])
    inside = r.contains(np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 0.5]]))
    assert inside.tolist() == [True, True, False]


def test_region_union_volume():
    a = EventRegion.box([0.0], [1.0])
    b = EventRegion.box([2.0], [3.5])
    u = a.union(b)
    assert u.n_boxes == 2
    assert abs(u.volume() - 2.5) < 1e-15


def test_complement_partitions_weights():
    grid = spacetime_grid([(-2.0, 2.0), (-2.0, 2.0)], [17, 19])
    inner = EventRegion.box([-0.7, -0.3], [0.9, 1.1])
    outer = inner.complement_within([-2.0, -2.0], [2.0, 2.0])
    total = inner.coverage_weights(grid) + outer.coverage_weights(grid)
    np.testing.assert_allclose(total, grid.weights(), atol=1e-13)


def test_complement_disjointness():
    inner = EventRegion.box([-0.5, -0.5], [0.5, 0.5])
    outer = inner.complement_within([-2.0, -2.0], [2.0, 2.0])
    pts = np.random.default_rng(0).uniform(-1.99, 1.99, size=(500, 2))
    both = inner.contains(pts).astype(int) + outer.contains(pts).astype(int)
    assert np.all(both == 1)


def test_clipped_reports_cut():
    r = EventRegion.box([-5.0], [5.0])
    clipped, cut = r.clipped([-2.0], [2.0])
    assert cut and clipped.volume() == 4.0
    same, cut2 = r.clipped([-10.0], [10.0])
    assert not cut2 and same.volume() == 10.0
    gone, cut3 = EventRegion.box([8.0], [9.0]).clipped([-2.0], [2.0])
    assert gone is None and cut3
