import json

import numpy as np
import pytest

from crmass import minimizer as mz
from crmass.constants import GAMMA3, SPHERE_MASS, SPHERE_TOTAL_MASS, VOLUME
from crmass.errors import InvalidInputError, StagnationError
from crmass.functionals import (extremal_density, j_epsilon, random_aut_params, random_density,
                                rng_for)
from crmass.minimizer import (MinimizerConfig, el_residual, final_report, fixed_point_step,
                              initial_state, minimize, prepare_start, write_final_density,
                              write_history_csv)
from crmass.plh import DensityField, PlhCoefficients, random_coefficients
from crmass.sphere import build_grid

DEG = 32


@pytest.fixture(scope="module")
def mgrid():
    return build_grid(24, 72)



def test_config_validation():
    with pytest.raises(InvalidInputError):
        MinimizerConfig(eps_schedule=(0.1, 0.2))
    with pytest.raises(InvalidInputError):
        MinimizerConfig(eps_schedule=(1.5,))
    with pytest.raises(InvalidInputError):
        MinimizerConfig(damping=0.0)
    with pytest.raises(InvalidInputError):
        MinimizerConfig(max_iters=0)
    assert MinimizerConfig(eps_schedule=[0.1, 0.01]).eps_schedule == (0.1, 0.01)


def test_el_residual_examples(mgrid):
    one = DensityField.constant(mgrid)
    for eps in (1e-8, 0.1):
        lam, res = el_residual(one, eps, DEG)
        assert res < 1e-13
        assert lam == pytest.approx(SPHERE_MASS + GAMMA3 / 4, rel=1e-13)
    E = extremal_density(random_aut_params(rng_for(1), 0.4), mgrid)
    assert el_residual(E, 1e-8, DEG)[1] <= 1e-5
    R = random_density(mgrid, 2, 0)
    assert el_residual(R, 1e-8, DEG)[1] > 1e-3


def test_extremal_is_a_fixed_point(mgrid):
    E = extremal_density(random_aut_params(rng_for(3), 0.4), mgrid)
    st = initial_state(E, 1e-8, DEG)
    nxt, _ = fixed_point_step(st, 0.5, DEG)
    assert np.max(np.abs(nxt.F.values - st.F.values)) < 1e-5


def test_multiplier_matches_volume_derivative(mgrid):
    # d/dt J_eps(F + t phi) with the 1/V prefactor frozen equals lambda * int phi at a critical point
    E = extremal_density(random_aut_params(rng_for(4), 0.3), mgrid)
    eps = 1e-8
    lam, res = el_residual(E, eps, DEG)
    phi = E.values * (1.0 + 0.3 * np.real(mgrid.zeta1 * np.conj(mgrid.zeta2)))
    h = 1e-5
    jp = j_epsilon(DensityField(E.values + h * phi, mgrid), eps, DEG, volume=VOLUME)
    jm = j_epsilon(DensityField(E.values - h * phi, mgrid), eps, DEG, volume=VOLUME)
    fd = (jp - jm) / (2 * h)
    assert fd == pytest.approx(lam * mgrid.integrate(phi), rel=1e-6)


def test_monotone_and_volume_preserving(mgrid):
    cfg = MinimizerConfig(eps_schedule=(0.1, 0.01), max_iters=3, degree=DEG)
    for i in range(20):
        F0 = random_density(mgrid, 30, i, 4, 1.0)
        vols = []
        state = minimize(cfg, F0, callback=lambda s: vols.append(s.F.volume))
        for eps in cfg.eps_schedule:
            js = [h[2] for h in state.history if h[0] == eps]
            assert all(b <= a + 1e-12 for a, b in zip(js, js[1:]))
        np.testing.assert_allclose(vols, VOLUME, rtol=1e-12)


def test_constant_start_converges_immediately(mgrid):
    state = minimize(MinimizerConfig(degree=DEG), DensityField.constant(mgrid))
    assert state.converged and not state.flagged
    assert all(h[1] == 0 for h in state.history)
    assert final_report(state, DEG)["J"] == pytest.approx(SPHERE_TOTAL_MASS, rel=1e-14)


def test_random_start_reaches_extremal(mgrid):
    u = random_coefficients(rng_for(31, 0), 4, DEG)
    F0 = DensityField.from_log_coefficients(u * 0.5, mgrid)
    state = minimize(MinimizerConfig(degree=DEG), F0)
    rep = final_report(state, DEG)
    assert abs(rep["J"] - SPHERE_TOTAL_MASS) < 1e-3
    assert rep["lhls_residual"] <= 1e-4
    assert rep["mass_spread"] <= 1e-3
    assert rep["eps"] == MinimizerConfig().eps_schedule[-1]


def test_clamp_warning(mgrid):
    vals = np.ones(mgrid.shape)
    vals[0, 0, 0] = 1e-20
    with pytest.warns(RuntimeWarning):
        F = prepare_start(DensityField(vals, mgrid))
    assert F.values.min() > 0 and F.volume == pytest.approx(VOLUME, rel=1e-13)


def test_stagnation_returns_flagged_best(mgrid, monkeypatch):
    def stuck(state, damping, degree, volume=VOLUME):
        raise StagnationError("stuck", state)
    monkeypatch.setattr(mz, "fixed_point_step", stuck)
    F0 = random_density(mgrid, 32, 0, 4, 1.0)
    state = minimize(MinimizerConfig(degree=DEG), F0)
    assert state.flagged and not state.converged


def test_outputs(mgrid, tmp_path):
    cfg = MinimizerConfig(eps_schedule=(0.1,), max_iters=2, degree=DEG)
    state = minimize(cfg, random_density(mgrid, 33, 0, 4, 1.0))
    write_history_csv(tmp_path / "h.csv", state)
    write_final_density(tmp_path / "f.csv", tmp_path / "f.json", state, DEG)
    assert (tmp_path / "h.csv").read_text().startswith("eps,iter,J_eps,residual,damping")
    rows = np.loadtxt(tmp_path / "f.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(rows[:, 3], state.F.values.ravel())
    coeffs = PlhCoefficients.from_json((tmp_path / "f.json").read_text())
    assert coeffs.max_degree == DEG
    rep = final_report(state, DEG)
    json.dumps(rep)
