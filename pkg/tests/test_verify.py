"""The verification battery and its individual checks."""

import numpy as np
import pytest

from eventloc.engine import EventRegion, spacetime_grid
from eventloc.grids import energy_grid_1d
from eventloc.kernels import make_kernel, random_isometric_kernel
from eventloc.states import make_orthonormal_basis, make_test_state
from eventloc.verify import (
    CheckResult,
    GroupElement,
    battery_report,
    check_covariance,
    check_first_moment_shift,
    check_kernel_conjugation,
    check_non_projector,
    check_normalization,
    check_positivity,
    haar_unitary,
    run_battery,
)


@pytest.fixture(scope="module")
def small_case():
    g = energy_grid_1d(0.8, 6.8, 64)
    k = make_kernel(g, {"kind": "dft", "n_sigma": 2, "n_gamma": 3,
                        "phase_coeffs": [0.0, 0.9, -0.5]})
    psi = make_test_state(g, {"family": "gaussian", "center": 3.6,
                              "width": 0.4, "channel_weights": [0.8, 0.6]})
    box = spacetime_grid([(-14.0, 14.0)], [112])
    return g, k, psi, box


def test_check_normalization_passes(small_case):
    g, k, psi, box = small_case
    res = check_normalization(psi, k, box)
    assert res.passed
    assert res.measured["identity_gap"] < 1e-8
    assert "momentum_total" in res.measured
    assert res.tolerance == 1e-8


def test_check_normalization_flags_bad_box(small_case):
    g, k, psi, _ = small_case
    tiny = spacetime_grid([(-2.0, 2.0)], [32])
    res = check_normalization(psi, k, tiny)
    assert not res.passed


def test_group_element_describe():
    t = GroupElement.translation([1.0])
    b = GroupElement.boost(0.4)
    r = GroupElement.rotation([0.0, 0.0, 1.0], 0.7)
    for g in (t, b, r):
        desc = g.describe()
        assert isinstance(desc, dict) and desc["kind"] == g.kind


def test_check_covariance_translation(small_case):
    g, k, psi, box = small_case
    res = check_covariance(psi, k, GroupElement.translation([1.5]))
    assert res.passed
    assert res.measured["relative_deviation"] < 1e-12


def test_check_covariance_rejects_boost_d1(small_case):
    g, k, psi, box = small_case
    with pytest.raises(ValueError):
        check_covariance(psi, k, GroupElement.boost(0.3))


def test_check_positivity(small_case):
    g, k, _, box = small_case
    res = check_positivity(k, box, seed=3)
    assert res.passed
    assert res.measured["global_min_density"] >= -1e-15
    assert res.measured["min_support_cell_mass"] > 0.0
    assert any("sampled" in n for n in res.notes)


def test_check_positivity_rejects_zero_state(small_case):
    g, k, _, box = small_case
    psi = make_test_state(g, {"family": "gaussian", "center": 3.6,
                              "width": 0.4, "channel_weights": [1.0, 0.0]})
    zero = psi.with_samples(np.zeros_like(psi.samples))
    with pytest.raises(ValueError, match="nonzero state"):
        check_positivity(k, box, psi=zero)


def test_check_first_moment_shift(small_case):
    g, k, psi, box = small_case
    res = check_first_moment_shift(psi, k, [1.5], box)
    assert res.passed
    assert res.measured["max_component_deviation"] < 1e-8


def test_check_non_projector_mixed(small_case):
    g, k, _, box = small_case
    basis = make_orthonormal_basis(g, 6, 3.6, 0.5, n_channels=2, channel=0)
    region = EventRegion.box([-3.0], [1.0])
    res = check_non_projector(k, region, basis, box, expect="mixed")
    assert res.passed
    assert res.measured["n_interior"] >= 1
    assert res.measured["eigenvalue_min"] > -1e-8
    assert res.measured["eigenvalue_max"] < 1.0 + 1e-8


def test_check_non_projector_full_box(small_case):
    g, k, _, box = small_case
    basis = make_orthonormal_basis(g, 6, 3.6, 0.5, n_channels=2, channel=0)
    full = EventRegion.box([-14.0], [14.0])
    res = check_non_projector(k, full, basis, box, expect="full")
    assert res.passed
    assert any("projection-like at box scale" in n for n in res.notes)


def test_check_non_projector_empty(small_case):
    g, k, _, box = small_case
    basis = make_orthonormal_basis(g, 6, 3.6, 0.5, n_channels=2, channel=0)
    empty = EventRegion.box([12.0], [13.9])
    res = check_non_projector(k, empty, basis, box, expect="empty")
    assert res.passed
    assert res.measured["eigenvalue_max"] < 1e-6


def test_check_kernel_conjugation(small_case):
    g, k, psi, box = small_case
    V = haar_unitary(2, np.random.default_rng(7))
    res = check_kernel_conjugation(psi, k, V)
    assert res.passed
    assert res.measured["max_deviation"] < 1e-10


def test_haar_unitary_is_unitary():
    rng = np.random.default_rng(0)
    for n in (2, 3, 5):
        V = haar_unitary(n, rng)
        np.testing.assert_allclose(V @ V.conj().T, np.eye(n), atol=1e-12)


def test_check_result_summary_shape(small_case):
    g, k, psi, box = small_case
    res = check_normalization(psi, k, box)
    line = res.summary()
    assert line.startswith("pass")
    assert res.name in line
    d = res.as_dict()
    assert set(d) >= {"name", "passed", "measured", "tolerance", "provenance"}


def test_battery_d1_subset():
    results = run_battery(["d1_reference"])
    assert all(r.passed for r in results), [r.summary() for r in results]
    names = [r.name for r in results]
    assert names == sorted(names)
    assert any(name.startswith("boost-element") for name in names)
    report = battery_report(results, tol_scale=1.0)
    assert report["n_checks"] == len(results)
    assert report["n_failed"] == 0


def test_battery_scaled_tolerances_fail():
    results = run_battery(["d1_reference"], tol_scale=1e-12)
    assert any(not r.passed for r in results)


def test_battery_threads_deterministic():
    a = run_battery(["d1_reference"], threads=1)
    b = run_battery(["d1_reference"], threads=2)
    assert [(r.name, r.passed) for r in a] == [(r.name, r.passed) for r in b]
    for ra, rb in zip(a, b):
        assert ra.measured == rb.measured
