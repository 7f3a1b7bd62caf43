import os
import subprocess
import sys

import numpy as np
import pytest

from crmass import kernels
from crmass.functionals import rng_for
from crmass.heisenberg import distance_arrays

BACKENDS = ["python"] + (["compiled"] if kernels.BACKEND == "compiled" else [])


def _cloud(n, seed=0):
    r = rng_for(seed)
    x, y, t = r.standard_normal((3, n))
    m = r.uniform(0.1, 1.0, n)
    diag = r.standard_normal(n)
    return x, y, t, m, diag


def _brute_pair_sum(x, y, t, m, diag):
    z = x + 1j * y
    d = distance_arrays(z[:, None], t[:, None], z[None, :], t[None, :])
    np.fill_diagonal(d, 1.0)
    return float(m @ np.log(d) @ m + np.dot(m * m, diag))


@pytest.mark.parametrize("name", BACKENDS)
def test_pair_sum_matches_brute_force(name):
    args = _cloud(700)
    got = kernels.heis_log_pair_sum(*args, impl=kernels.backend(name))
    assert got == pytest.approx(_brute_pair_sum(*args), rel=1e-12)


@pytest.mark.parametrize("name", BACKENDS)
def test_ball_masses_match_brute_force(name):
    r = rng_for(1)
    g = r.standard_normal((60, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    z1, z2 = g[:, 0] + 1j * g[:, 1], g[:, 2] + 1j * g[:, 3]
    w = r.uniform(0, 1, 60)
    got = kernels.sphere_ball_masses(z1[:7], z2[:7], z1, z2, w, 0.4, impl=kernels.backend(name))
    inside = np.abs(1 - (z1[:7, None] * np.conj(z1) + z2[:7, None] * np.conj(z2))) < 0.4
    np.testing.assert_allclose(got, inside @ w, rtol=1e-14)


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="compiled extension not built")
def test_backends_agree():
    args = _cloud(3000, seed=2)
    a = kernels.heis_log_pair_sum(*args, impl=kernels.backend("compiled"))
    b = kernels.heis_log_pair_sum(*args, impl=kernels.backend("python"))
    assert a == pytest.approx(b, rel=1e-12)


def test_backend_lookup():
    assert kernels.backend("python").__name__.endswith("_kernels_py")
    with pytest.raises(ValueError):
        kernels.backend("fortran")


def test_pure_python_switch():
    env = dict(os.environ, CRMASS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import crmass.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
