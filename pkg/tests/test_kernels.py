"""Kernel families and their Gram checks."""

import numpy as np
import pytest

from eventloc.grids import energy_grid_1d, shell_grid_2d
from eventloc.kernels import (
    KernelFamily,
    kernel_conjugate,
    make_kernel,
    random_isometric_kernel,
    validate_isometry,
    validate_subnormalization,
)
from eventloc.states import make_test_state
from eventloc.verify import haar_unitary


def _grid1():
    return energy_grid_1d(0.8, 6.8, 48)


def _grid2():
    return shell_grid_2d((0.5, 2.5), 20, 1.2, 40, rule="uniform")


def test_trivial_kernel_is_exactly_isometric():
    k = make_kernel(_grid1(), {"kind": "trivial", "n_sigma": 2})
    rep = validate_isometry(k, tol=1e-14)
    assert rep.passed
    assert rep.worst_value == 0.0
    gram = k.gram()
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(2), gram.shape),
                               atol=0)


def test_dft_kernel_isometric():
    k = make_kernel(_grid2(), {
        "kind": "dft", "n_sigma": 2, "n_gamma": 3,
        "q_values": [0.7, 1.3, 2.1], "phase_coeffs": [0.0, 0.4, -0.9],
    })
    rep = validate_isometry(k, tol=1e-12)
    assert rep.passed, rep.summary()


def test_make_kernel_rejects_unused_options():
    with pytest.raises(ValueError, match="unused"):
        make_kernel(_grid1(), {"kind": "trivial", "n_sigma": 2, "foo": 1})


@pytest.mark.parametrize("seed", range(8))
def test_random_kernels_isometric(seed):
    g = _grid2()
    k = random_isometric_kernel(2, 2, 3, g, 600 + seed)
    rep = validate_isometry(k, tol=1e-12)
    assert rep.passed, rep.summary()


def test_broken_kernel_localizes_offender():
    g = _grid1()
    k = random_isometric_kernel(1, 2, 3, g, 99)
    bad_node = 17
    F = k.F.copy()
    F[:, :, bad_node] *= 1.1
    broken = KernelFamily(k.grid, k.gammas, k.weights, F)
    rep = validate_isometry(broken, tol=1e-10)
    assert not rep.passed
    assert rep.worst_node == bad_node
    assert abs(rep.worst_mass - g.masses[bad_node]) < 1e-15
    # 1.1^2 - 1 = 0.21 deviation on the diagonal there
    assert abs(rep.worst_value - 0.21) < 1e-6
    assert "node" in rep.summary()


def test_scaled_kernel_subnormalized():
    k = random_isometric_kernel(1, 2, 2, _grid1(), 4)
    half = k.scaled(0.5)
    assert half.mode == "subnormalized"
    with pytest.raises(ValueError, match="normalized"):
        validate_isometry(half, tol=1e-10)
    rep = validate_subnormalization(half, tol=1e-10)
    assert rep.passed
    # every Gram eigenvalue sits at 0.25
    assert abs(rep.eigenvalue_floor - 0.25) < 1e-12


def test_scale_out_of_range():
    k = random_isometric_kernel(1, 2, 2, _grid1(), 4)
    with pytest.raises(ValueError):
        k.scaled(1.5)
    with pytest.raises(ValueError):
        k.scaled(0.0)


def test_subnormalization_rejects_excess():
    g = _grid1()
    k = random_isometric_kernel(1, 2, 2, g, 5)
    F = k.F.copy() * 1.01
    hot = KernelFamily(g, k.gammas, k.weights, F, mode="subnormalized")
    rep = validate_subnormalization(hot, tol=1e-6)
    assert not rep.passed


def test_conjugation_preserves_gram():
    rng = np.random.default_rng(8)
    k = random_isometric_kernel(2, 3, 3, _grid2(), 12)
    V = haar_unitary(3, rng)
    kc = kernel_conjugate(k, V)
    assert validate_isometry(kc, tol=1e-10).passed
    np.testing.assert_allclose(kc.gram(), k.gram(), atol=1e-12)


def test_conjugation_rejects_non_unitary():
    k = random_isometric_kernel(1, 2, 2, _grid1(), 4)
    with pytest.raises(ValueError):
        kernel_conjugate(k, np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_table_kernel_roundtrip():
    g = _grid2()
    k = random_isometric_kernel(2, 2, 3, g, 21)
    cfg = {
        "kind": "table",
        "q_values": [float(q) for q in k.q_values],
        "weights": [float(w) for w in k.weights],
        "F": [[[[float(v.real), float(v.imag)] for v in row]
               for row in block] for block in k.F],
        "mode": k.mode,
    }
    k2 = make_kernel(g, cfg)
    np.testing.assert_allclose(k2.F, k.F, atol=0)
    np.testing.assert_allclose(k2.gram(), k.gram(), atol=1e-14)


def test_kernel_field_validation():
    g = _grid1()
    k = random_isometric_kernel(1, 2, 2, g, 4)
    with pytest.raises(ValueError, match="weights"):
        KernelFamily(g, k.gammas, np.array([1.0]), k.F)
    with pytest.raises(ValueError, match="mode"):
        KernelFamily(g, k.gammas, k.weights, k.F, mode="loose")
    with pytest.raises(ValueError):
        KernelFamily(g, (), np.empty(0), k.F)


def test_require_state_channel_mismatch():
    g = _grid1()
    k = random_isometric_kernel(1, 2, 2, g, 4)
    psi = make_test_state(g, {"family": "gaussian", "center": 3.5,
                              "width": 0.4, "channel_weights": [1.0]})
    with pytest.raises(ValueError, match="channels"):
        k.require_state(psi)


def test_require_state_grid_mismatch():
    k = random_isometric_kernel(1, 2, 2, _grid1(), 4)
    other = energy_grid_1d(0.9, 6.9, 48)
    psi = make_test_state(other, {"family": "gaussian", "center": 3.5,
                                  "width": 0.4,
                                  "channel_weights": [1.0, 0.5]})
    with pytest.raises(ValueError, match="grid"):
        k.require_state(psi)


def test_d1_rejects_nontrivial_section_labels():
    # the d=1 little group is trivial; kernels there carry c = 0 only
    g2 = _grid2()
    k = random_isometric_kernel(2, 2, 2, g2, 7)
    if all(gl.c == 0 for gl in k.gammas):
        pytest.skip("sampled labels happen to be trivial")
    g1 = _grid1()
    F = np.ones((len(k.gammas), 2, g1.n_mass), dtype=complex)
    with pytest.raises(ValueError, match="c must be 0"):
        KernelFamily(g1, k.gammas, k.weights, F)
