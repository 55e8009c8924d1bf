import os
import subprocess
import sys

import numpy as np
import pytest

from leray import _kernels_py, kernels

compiled = pytest.importorskip("leray._kernels")


def rand(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@pytest.mark.parametrize("n,a,b", [(1, 1, 1), (2, 0, 2), (3, 2, 3), (4, 3, 4)])
def test_leray_density_backends_agree(n, a, b):
    rng = np.random.default_rng(n)
    N = 50
    D = a + n - 1 + b
    args = rand(rng, N, n), rand(rng, N, n, D), rand(rng, N, a, D), rand(rng, N, b, D)
    ref = _kernels_py.leray_density(*args)
    got = compiled.leray_density(*args)
    assert np.allclose(got, ref, rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("normalize", [True, False])
@pytest.mark.parametrize("hefer", [True, False])
def test_cf_density_backends_agree(normalize, hefer):
    rng = np.random.default_rng(7)
    N, n, m = 40, 2, 1
    D = 2 * n - 1 + m
    e, de, w, dz = rand(rng, N, n), rand(rng, N, n, D), rand(rng, N, n), rand(rng, N, n, D)
    pre = rand(rng, N, D - (n - 1) - n, D)
    A = dA = mu0 = dmu0 = None
    if hefer:
        A, dA = rand(rng, N, n), rand(rng, N, n, D)
        mu0, dmu0 = rng.uniform(size=N), rng.normal(size=(N, D))
    ref = _kernels_py.cf_density(e, de, w, dz, pre, A, dA, mu0, dmu0, normalize)
    got = compiled.cf_density(e, de, w, dz, pre, A, dA, mu0, dmu0, normalize)
    assert np.allclose(got, ref, rtol=1e-10, atol=1e-12)


def test_empty_input():
    z = np.zeros((0, 2), dtype=complex)
    dz = np.zeros((0, 2, 1), dtype=complex)
    assert compiled.leray_density(z, dz, np.zeros((0, 0, 1), dtype=complex), np.zeros((0, 0, 1), dtype=complex)).shape == (0,)


def test_default_backend_is_compiled():
    assert kernels.backend() == "compiled"


def test_env_forces_python_backend():
    env = dict(os.environ, LERAY_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from leray import kernels; print(kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
