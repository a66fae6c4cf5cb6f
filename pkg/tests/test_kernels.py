"""Numba and numpy kernel paths agree and the env flag selects them."""

import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from grouppgd import kernels


def random_kernel_data(seed, n_r=7, n_theta=13, n_angles=4, rays=5, n_off=3):
    rng = np.random.default_rng(seed)
    x2 = rng.standard_normal((n_r, n_theta))
    cols = rng.integers(0, n_theta, size=(n_angles, n_off)).astype(np.int64)
    weights = rng.standard_normal((n_angles, rays, n_r, n_off))
    weights_t = np.ascontiguousarray(np.moveaxis(weights, 1, 3))
    y = rng.standard_normal(n_angles * rays)
    return x2, cols, weights, weights_t, y


def test_numpy_adjoint_consistency():
    x2, cols, weights, weights_t, y = random_kernel_data(0)
    fwd = kernels.polar_forward_numpy(x2, cols, weights)
    adj = kernels.polar_adjoint_numpy(y, cols, weights_t, *x2.shape)
    assert_allclose(fwd @ y, x2.ravel() @ adj, rtol=1e-12)


def test_numpy_scatter_accumulates_duplicate_columns():
    # two offsets hitting the same column must add, not overwrite
    x2 = np.ones((2, 4))
    cols = np.array([[1, 1]], dtype=np.int64)
    weights_t = np.ones((1, 2, 2, 1))
    adj = kernels.polar_adjoint_numpy(np.array([1.0]), cols, weights_t, 2, 4)
    expected = np.zeros((2, 4))
    expected[:, 1] = 2.0
    assert_allclose(adj, expected.ravel())


@pytest.mark.skipif(not kernels.NUMBA_ENABLED, reason="numba disabled")
def test_numba_matches_numpy():
    for seed in range(5):
        x2, cols, weights, weights_t, y = random_kernel_data(seed)
        assert_allclose(
            kernels.polar_forward_numba(x2, cols, weights),
            kernels.polar_forward_numpy(x2, cols, weights),
            rtol=1e-13, atol=1e-13,
        )
        assert_allclose(
            kernels.polar_adjoint_numba(y, cols, weights_t, *x2.shape),
            kernels.polar_adjoint_numpy(y, cols, weights_t, *x2.shape),
            rtol=1e-13, atol=1e-13,
        )


def test_env_flag_forces_numpy_path():
    code = (
        "from grouppgd import kernels; "
        "assert not kernels.NUMBA_ENABLED; "
        "assert kernels.polar_forward is kernels.polar_forward_numpy; "
        "print('numpy path')"
    )
    env = dict(os.environ, GROUPPGD_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "numpy path" in out.stdout


def test_active_path_matches_flag():
    if kernels.NUMBA_ENABLED:
        assert kernels.polar_forward is kernels.polar_forward_numba
    else:
        assert kernels.polar_forward is kernels.polar_forward_numpy
