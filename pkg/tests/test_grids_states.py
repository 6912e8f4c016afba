"""Shell grids and momentum-space states."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventloc.grids import MassShellGrid, energy_grid_1d, shell_grid_2d, shell_grid_4d
from eventloc.harmonics import n_packed
from eventloc.lorentz import rotation_su2
from eventloc.states import (
    apply_boost_1p1,
    apply_rotation,
    apply_translation,
    inner_product,
    make_orthonormal_basis,
    make_test_state,
    norm_squared,
)


def _grid1(n=64, rule="uniform"):
    return energy_grid_1d(0.8, 6.8, n, rule=rule)


def _grid2():
    return shell_grid_2d((0.5, 2.5), 24, 1.4, 48, rule="uniform")


def _grid4():
    return shell_grid_4d((0.5, 2.5), 8, 1.0, 10, l_max=2)


def _psi1(grid=None):
    return make_test_state(grid or _grid1(), {
        "family": "gaussian", "center": 3.5, "width": 0.4,
        "channel_weights": [0.8, 0.6j],
    })


# -- grids ---------------------------------------------------------------


def test_energy_grid_uniform_spacing():
    g = _grid1(48)
    assert g.dim == 1
    assert g.uniform_energy_spacing() is not None
    np.testing.assert_allclose(np.diff(g.energies), g.uniform_energy_spacing())
    # trapezoid: endpoint weights are half the interior ones
    w = g.mass_weights
    assert abs(w[0] - w[1] / 2) < 1e-15


def test_energy_grid_gauss_rule():
    from scipy.special import erf

    g = _grid1(24, rule="gauss")
    assert g.uniform_energy_spacing() is None
    # 24 gauss nodes integrate the windowed gaussian to machine accuracy
    f = lambda e: np.exp(-((e - 3.0) ** 2))
    exact = np.sqrt(np.pi) / 2 * (erf(6.8 - 3.0) - erf(0.8 - 3.0))
    got = float(np.sum(g.mass_weights * f(g.energies)))
    assert abs(got - exact) < 1e-12


def test_grid_rejects_bad_nodes():
    with pytest.raises(ValueError):
        MassShellGrid(dim=1, masses=np.array([1.0, 0.5]),
                      mass_weights=np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        MassShellGrid(dim=1, masses=np.array([-1.0, 0.5]),
                      mass_weights=np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        MassShellGrid(dim=3, masses=np.array([1.0, 2.0]),
                      mass_weights=np.array([1.0, 1.0]))


def test_shell_grid_2d_measure():
    g = _grid2()
    assert g.dim == 2
    w = g.measure_weights()
    assert w.shape == (24, 48)
    assert np.all(w > 0)
    # invariant measure: total equals int mu dmu times int dz
    want = 0.5 * (2.5**2 - 0.5**2) * 2.8
    assert abs(np.sum(w) - want) < 1e-10


def test_shell_grid_4d_shape():
    g = _grid4()
    assert g.dim == 4 and g.l_max == 2
    assert np.all(g.rapidities >= 0.0)
    k0, kmag = g.k_values()
    np.testing.assert_allclose(k0**2 - kmag**2,
                               (g.masses**2)[:, None] * np.ones(10), atol=1e-10)


def test_grid_matches():
    a, b = _grid2(), _grid2()
    assert a.matches(b)
    assert not a.matches(_grid4())


def test_grid_arrays_frozen():
    g = _grid1()
    with pytest.raises(ValueError):
        g.energies[0] = 0.0


# -- states --------------------------------------------------------------


def test_test_state_normalized():
    psi = _psi1()
    assert abs(norm_squared(psi) - 1.0) < 1e-12
    assert psi.n_channels == 2


def test_channel_weights_split_norm():
    psi = _psi1()
    # |w_sigma|^2 / sum: 0.64 and 0.36
    per = [float(np.sum(np.abs(psi.samples[s]) ** 2 * psi.grid.mass_weights))
           for s in range(2)]
    assert abs(per[0] - 0.64) < 1e-12
    assert abs(per[1] - 0.36) < 1e-12


def test_state_samples_read_only():
    psi = _psi1()
    with pytest.raises(ValueError):
        psi.samples[0, 0] = 1.0


def test_with_samples_shape_check():
    psi = _psi1()
    with pytest.raises(ValueError):
        psi.with_samples(np.zeros((2, 3), dtype=complex))


def test_inner_product_conjugate_symmetry():
    g = _grid1()
    phi = make_test_state(g, {"family": "random", "seed": 3, "channels": 2})
    psi = _psi1(g)
    assert abs(inner_product(phi, psi) - np.conj(inner_product(psi, phi))) < 1e-14
    assert abs(inner_product(psi, psi) - 1.0) < 1e-12


def test_translation_unitary_and_additive():
    psi = _psi1()
    a = apply_translation(psi, [1.3])
    assert abs(norm_squared(a) - 1.0) < 1e-12
    b = apply_translation(a, [-0.4])
    c = apply_translation(psi, [0.9])
    np.testing.assert_allclose(b.samples, c.samples, atol=1e-12)


def test_translation_zero_is_identity():
    psi = _psi1()
    np.testing.assert_allclose(apply_translation(psi, [0.0]).samples,
                               psi.samples, atol=0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-8.0, 8.0), st.floats(-8.0, 8.0))
def test_translation_norm_invariant_2d(t, x):
    psi = make_test_state(_grid2(), {
        "family": "gaussian", "center": [1.5, 0.1], "width": [0.3, 0.3],
        "channel_weights": [1.0],
    })
    shifted = apply_translation(psi, [t, x])
    assert abs(norm_squared(shifted) - 1.0) < 1e-10


def test_rotation_unitary_composition():
    g = _grid4()
    psi = make_test_state(g, {
        "family": "gaussian_lm",
        "components": [
            {"l": 0, "n": 0, "center": [1.4, 0.4], "width": [0.3, 0.2], "weight": 1.0},
            {"l": 2, "n": -1, "center": [1.5, 0.5], "width": [0.3, 0.2], "weight": 0.5},
        ],
        "channel_weights": [1.0, 0.4],
    })
    u1 = rotation_su2([0.1, 0.9, -0.3], 0.8)
    u2 = rotation_su2([-1.0, 0.2, 0.5], 1.7)
    a = apply_rotation(apply_rotation(psi, u1), u2)
    b = apply_rotation(psi, u2 @ u1)
    assert abs(norm_squared(a) - 1.0) < 1e-10
    np.testing.assert_allclose(a.samples, b.samples, atol=1e-10)


def test_rotation_identity():
    g = _grid4()
    psi = make_test_state(g, {
        "family": "gaussian_lm",
        "components": [{"l": 1, "n": 0, "center": [1.4, 0.4],
                        "width": [0.3, 0.2], "weight": 1.0}],
    })
    np.testing.assert_allclose(apply_rotation(psi, np.eye(2)).samples,
                               psi.samples, atol=1e-14)


def test_boost_unitary_within_support():
    # spline shift: norm is preserved to interpolation accuracy
    g = shell_grid_2d((0.5, 2.5), 24, 2.0, 400, rule="uniform")
    psi = make_test_state(g, {
        "family": "gaussian", "center": [1.5, 0.0], "width": [0.25, 0.25],
        "channel_weights": [1.0],
    })
    boosted = apply_boost_1p1(psi, 0.3, support_tol=1e-8)
    assert abs(norm_squared(boosted) - 1.0) < 1e-6


def test_boost_refuses_support_loss():
    # a state parked near the rapidity edge cannot be boosted further out
    psi = make_test_state(_grid2(), {
        "family": "gaussian", "center": [1.5, 1.1], "width": [0.25, 0.25],
        "channel_weights": [1.0],
    })
    with pytest.raises(ValueError, match="support"):
        apply_boost_1p1(psi, 1.0)


def test_orthonormal_basis():
    g = _grid1()
    basis = make_orthonormal_basis(g, 6, 3.5, 0.5, n_channels=2, channel=0)
    assert len(basis) == 6
    gram = np.array([[inner_product(a, b) for b in basis] for a in basis])
    np.testing.assert_allclose(gram, np.eye(6), atol=1e-10)


def test_angular_band_d4_only():
    psi = _psi1()
    with pytest.raises(ValueError):
        psi.angular_band
    g = _grid4()
    psi4 = make_test_state(g, {
        "family": "gaussian_lm",
        "components": [{"l": 2, "n": 1, "center": [1.4, 0.4],
                        "width": [0.3, 0.2], "weight": 1.0}],
    })
    assert psi4.samples.shape[1] == n_packed(psi4.angular_band)
