"""Phase-sum backends: contract, equivalence, fallback selection."""

import os
import subprocess
import sys

import numpy as np
import pytest

from eventloc import _accel


def _case(n_q=37, n_r=3, n_p=11, dim=2, seed=0):
    rng = np.random.default_rng(seed)
    k = rng.normal(size=(n_q, dim))
    amps = rng.normal(size=(n_r, n_q)) + 1j * rng.normal(size=(n_r, n_q))
    x = rng.normal(size=(n_p, dim))
    return k, amps, x


def _loop_oracle(k, amps, x):
    # out[r, p] = sum_q amps[r, q] exp(-i k_q . x_p), k already lowered
    out = np.zeros((amps.shape[0], x.shape[0]), dtype=complex)
    for r in range(amps.shape[0]):
        for p in range(x.shape[0]):
            out[r, p] = np.sum(amps[r] * np.exp(-1j * (k @ x[p])))
    return out


def test_backend_registry():
    names = _accel.available_backends()
    assert "numpy" in names
    assert _accel.BACKEND in names


@pytest.mark.parametrize("name", _accel.available_backends())
def test_phase_sum_contract(name):
    fn = _accel.get_backend(name).phase_sum
    k, amps, x = _case()
    got = fn(k, amps, x)
    want = _loop_oracle(k, amps, x)
    scale = np.max(np.abs(want))
    assert np.max(np.abs(got - want)) < 1e-13 * scale


def test_backends_agree():
    names = _accel.available_backends()
    if len(names) < 2:
        pytest.skip("only one backend compiled in")
    k, amps, x = _case(n_q=101, n_p=29, seed=3)
    outs = [_accel.get_backend(n).phase_sum(k, amps, x) for n in names]
    scale = np.max(np.abs(outs[0]))
    for other in outs[1:]:
        assert np.max(np.abs(outs[0] - other)) < 1e-12 * scale


@pytest.mark.parametrize("name", _accel.available_backends())
def test_phase_sum_accepts_read_only(name):
    fn = _accel.get_backend(name).phase_sum
    k, amps, x = _case(seed=5)
    for a in (k, amps, x):
        a.setflags(write=False)
    got = fn(k, amps, x)
    want = _loop_oracle(k, amps, x)
    assert np.max(np.abs(got - want)) < 1e-12 * np.max(np.abs(want))


def test_get_backend_unknown():
    with pytest.raises(ValueError):
        _accel.get_backend("fortran")


def test_force_fallback_env():
    code = "from eventloc import _accel; print(_accel.BACKEND)"
    env = dict(os.environ, EVENTLOC_FORCE_FALLBACK="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_d1_lowering_convention():
    # d = 1 uses 1-column k and x; the sign convention is part of the contract
    fn = _accel.get_backend("numpy").phase_sum
    k = np.array([[2.0]])
    amps = np.array([[1.0 + 0j]])
    x = np.array([[0.25]])
    got = fn(k, amps, x)[0, 0]
    assert abs(got - np.exp(-0.5j)) < 1e-15
