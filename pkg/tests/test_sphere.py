import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crmass.constants import VOLUME
from crmass.errors import InvalidInputError
from crmass.plh import DensityField
from crmass.sphere import (AutSphereParams, SpherePoint, build_grid, grid_for_degree,
                           jacobian_sphere_automorphism, jk_values, load_grid,
                           monomial_integral, normalize_to_volume, random_points,
                           save_grid, sphere_distance, unitary_to)

E1 = SpherePoint(1.0, 0.0)


def test_distance_examples():
    assert sphere_distance(E1, E1) == 0.0
    assert sphere_distance(E1, SpherePoint(-1.0, 0.0)) == pytest.approx(2.0, abs=1e-15)
    assert sphere_distance(E1, SpherePoint(1j, 0.0)) == pytest.approx(2 ** 0.75, abs=1e-15)


def test_distance_symmetric_and_unitary_invariant(rng):
    z1, z2 = random_points(rng, 3)
    p, q, r = (SpherePoint(a, b) for a, b in zip(z1, z2))
    assert sphere_distance(p, q) == pytest.approx(sphere_distance(q, p), abs=1e-15)
    U = unitary_to(r)
    Up = SpherePoint(*(U @ p.as_array()))
    Uq = SpherePoint(*(U @ q.as_array()))
    assert sphere_distance(Up, Uq) == pytest.approx(sphere_distance(p, q), abs=1e-13)


def test_point_validation():
    with pytest.raises(InvalidInputError):
        SpherePoint(1.0, 0.5)
    assert (-E1).zeta1 == -1.0


def test_unitary_to_maps_base_point(rng):
    z1, z2 = random_points(rng, 1)
    p = SpherePoint(z1[0], z2[0])
    U = unitary_to(p)
    np.testing.assert_allclose(U @ np.array([1.0, 0.0]), p.as_array(), atol=1e-15)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(2), atol=1e-14)


def test_grid_examples(grid8):
    assert grid8.integrate(np.ones(grid8.shape)) == pytest.approx(2 * math.pi**2, rel=1e-13)
    assert grid8.integrate(np.abs(grid8.zeta1) ** 2) == pytest.approx(math.pi**2, rel=1e-13)
    assert abs(grid8.integrate(grid8.zeta1.real)) < 1e-14
    assert abs(grid8.integrate(grid8.zeta1.imag)) < 1e-14


def test_grid_exactness_formula():
    g = build_grid(5, 40)
    assert g.exactness_degree == min(4 * 5 - 2, 39)
    assert grid_for_degree(32).shape == (40, 128, 128)
    with pytest.raises(InvalidInputError):
        build_grid(0, 4)


@given(st.integers(0, 6), st.integers(0, 6))
def test_monomial_moments(grid8, a, b):
    # |zeta1|^2a |zeta2|^2b has degree 2(a+b) <= 24 < exactness 31
    vals = np.abs(grid8.zeta1) ** (2 * a) * np.abs(grid8.zeta2) ** (2 * b)
    assert grid8.integrate(vals) == pytest.approx(monomial_integral(a, b, a, b), rel=1e-12)


def test_off_diagonal_monomials_vanish(grid8):
    vals = grid8.zeta1**2 * np.conj(grid8.zeta1 * grid8.zeta2)
    assert abs(grid8.integrate(vals.real)) < 1e-13
    assert monomial_integral(2, 0, 1, 1) == 0.0


def test_jacobian_examples(grid8):
    assert jacobian_sphere_automorphism(AutSphereParams(1.0, (0, 0)), E1) == 1.0
    assert jacobian_sphere_automorphism(AutSphereParams(1.0, (0.5, 0)), E1) == pytest.approx(16.0)
    with pytest.raises(InvalidInputError):
        AutSphereParams(1.0, (0.8, 0.7))
    with pytest.raises(InvalidInputError):
        AutSphereParams(-1.0, (0.0, 0.0))


def test_normalize_examples(grid8):
    two = DensityField.constant(grid8, 2.0)
    np.testing.assert_allclose(normalize_to_volume(two).values, 1.0, rtol=1e-13)
    prm = AutSphereParams(1.0, (0.5, 0.0))
    F = normalize_to_volume(DensityField.from_function(grid8, lambda a, b: jk_values(prm, a, b)))
    assert abs(F.volume - VOLUME) <= 1e-12 * VOLUME
    again = normalize_to_volume(F)
    np.testing.assert_allclose(again.values, F.values, rtol=1e-14)
    with pytest.raises(InvalidInputError):
        normalize_to_volume(DensityField(np.zeros(grid8.shape), grid8))


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_grid_roundtrip(tmp_path, suffix):
    g = build_grid(3, 8)
    path = tmp_path / f"grid{suffix}"
    save_grid(g, path)
    h = load_grid(path)
    assert (h.n_eta, h.n_angle, h.exactness_degree) == (3, 8, g.exactness_degree)
    np.testing.assert_array_equal(h.weights, g.weights)


def test_grid_load_rejects_tampering(tmp_path):
    g = build_grid(3, 8)
    path = tmp_path / "grid.csv"
    save_grid(g, path)
    lines = path.read_text().splitlines()
    lines[0] = lines[0].replace("n_angle=8", "n_angle=9")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(InvalidInputError):
        load_grid(path)
