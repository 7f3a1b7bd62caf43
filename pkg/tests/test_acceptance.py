"""Acceptance criteria 1-9.  Each test records one PASS/FAIL line; the lines are
printed in the pytest terminal summary and when this file is run as a script."""

import math
import time

import numpy as np
import pytest

from crmass import cli
from crmass.constants import SPHERE_MASS, SPHERE_TOTAL_MASS
from crmass.functionals import (extremal_density, lhls_residual, lhls_sweep, random_aut_params,
                                random_density, random_log_density, rng_for, sweep_summary)
from crmass.heisenberg import (HeisGrid, HeisPoint, cayley, cayley_density_grid,
                               cayley_distance_factor, j_heisenberg, koranyi_distance,
                               refinement_study)
from crmass.mass import (geometric_mass_shift, green_mean, green_sphere, mass_transform,
                         q_prime_and_geometric_mass, robin_mass_extrapolated, spectral_green)
from crmass.minimizer import MinimizerConfig, final_report, minimize
from crmass.plh import DensityField, random_coefficients
from crmass.spectral import (conformal_eigenvalues, conformal_inverse_apply,
                             conformal_inverse_galerkin, sphere_eigenvalues,
                             truncated_trace_difference)
from crmass.sphere import SpherePoint, build_grid, grid_for_degree, sphere_distance

RESULTS = []
DEG = 32


def report(num, ok, text, fatal=True):
    tag = "PASS" if ok else ("FAIL" if fatal else "FAIL (report-only)")
    line = f"criterion {num}: {tag}  {text}"
    RESULTS.append(line)
    print(line)
    return ok or not fatal


@pytest.fixture(scope="module")
def grid():
    return grid_for_degree(DEG)


def _sig12(a, b):
    return f"{a:.12g}" == f"{b:.12g}"


def test_criterion_1_constants(capsys):
    t0 = time.perf_counter()
    code, summary = cli.run(cli.RunConfig(command="constants"))
    capsys.readouterr()
    r = summary["result"]
    closed = (_sig12(r["gamma3"], 1 / (4 * math.pi**2))
              and _sig12(r["mass"], math.log(2) / (8 * math.pi**2)))
    err = abs(robin_mass_extrapolated(200) - SPHERE_MASS)
    dt = time.perf_counter() - t0
    ok = closed and err <= 1e-3 and dt < 10 and code == 0
    assert report(1, ok, f"closed form to 12 digits={closed}; |extrapolated - m0|={err:.2e} "
                         f"(tol 1e-3); runtime {dt:.1f}s (limit 10s)")


def test_criterion_2_green_conventions():
    g24 = grid_for_degree(24)
    rng = rng_for(2, 0)
    idx = [tuple(rng.integers(0, s) for s in g24.shape) for _ in range(8)]
    pts = [SpherePoint(g24.zeta1[k], g24.zeta2[k]) for k in idx]
    mean_err = max(abs(green_mean(p)) for p in pts)
    sym_err = max(abs(green_sphere(p, q) - green_sphere(q, p))
                  for p in pts for q in pts if p is not q)
    pairs = [(p, q) for p in pts for q in pts if p is not q and sphere_distance(p, q) >= 0.5]
    pairs += [(pts[0], SpherePoint(pts[0].zeta1 * np.exp(1j * a), pts[0].zeta2 * np.exp(1j * a)))
              for a in (0.4, 1.3, 2.9)]
    spec_err = max(abs(spectral_green(p, q, 200, tail_terms=40) - green_sphere(p, q))
                   for p, q in pairs)
    ok = mean_err <= 1e-8 and sym_err <= 1e-8 and spec_err <= 1e-6
    assert report(2, ok, f"mean-zero {mean_err:.1e}, symmetry {sym_err:.1e} (tol 1e-8); "
                         f"J=200 spectral sum vs closed form {spec_err:.1e} on {len(pairs)} "
                         f"pairs with d>=0.5 (tol 1e-6)")


def test_criterion_3_mass_identity(grid):
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(50):
        F = random_density(grid, 3, i)
        lhs = mass_transform(F, DEG).total - SPHERE_TOTAL_MASS
        worst = max(worst, abs(lhs - lhls_residual(F, DEG)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 60
    assert report(3, ok, f"max |(M_F - M_0) - residual| = {worst:.1e} over 50 frames "
                         f"(tol 1e-10); runtime {dt:.1f}s (limit 60s)")


def test_criterion_4_sharp_lhls(grid):
    rows = lhls_sweep(grid, DEG, 100, 7)
    low = sweep_summary(rows)["min_residual"]
    ext = max(abs(lhls_residual(extremal_density(random_aut_params(rng_for(4, i), 0.7), grid), DEG))
              for i in range(10))
    ok = low >= -1e-9 and ext <= 1e-6
    assert report(4, ok, f"min residual over 100 samples {low:.3e} (>= -1e-9); "
                         f"max |residual| on 10 extremals {ext:.1e} (tol 1e-6)")


def test_criterion_5_eigenvalue_inequality(grid):
    frames = [extremal_density(random_aut_params(rng_for(5, i), 0.7), grid) for i in range(20)]
    frames += [random_density(grid, 5, i) for i in range(20)]
    sums = [float(np.sum(1 / conformal_eigenvalues(F, 4, DEG))) for F in frames]
    for F in frames:
        F.cache.clear()
    base = float(np.sum(1 / conformal_eigenvalues(DensityField.constant(grid), 4, DEG)))
    ok = min(sums) >= 0.25 - 1e-9 and abs(base - 0.25) <= 1e-12
    assert report(5, ok, f"min sum 1/lambda_k (k<=4) over 40 frames {min(sums):.12f} "
                         f"(>= 0.25 - 1e-9); F=1 gives {base:.15f}")


def test_criterion_6_inverse_and_geometric_mass(grid):
    worst = 0.0
    for i in range(20):
        F = random_density(grid, 6, i)
        r = rng_for(60, i)
        c = random_coefficients(r, 3, 3)
        f = np.cos(r.uniform(0.5, 2) * grid.zeta1.real) + np.exp(0.5 * grid.zeta2.imag) * c.const
        f = f + r.standard_normal() * np.abs(grid.zeta1) ** 2
        d = (conformal_inverse_apply(F, f, DEG) - conformal_inverse_galerkin(F, f, DEG)).norm()
        worst = max(worst, d)
        F.cache.clear()
    base = q_prime_and_geometric_mass(None, DEG, grid)
    q_ok = np.all(base.q_prime == 8.0) and np.all(base.geometric == base.mass.field)
    prop = 0.0
    for i in range(5):
        _, F = random_log_density(grid, 61, i, 4, 1.0, max_degree=DEG)
        gm = q_prime_and_geometric_mass(F, DEG)
        prop = max(prop, float(np.max(np.abs(gm.geometric - SPHERE_MASS - geometric_mass_shift(F, DEG)))))
        E = extremal_density(random_aut_params(rng_for(62, i), 0.5), grid)
        gm = q_prime_and_geometric_mass(E, DEG)
        prop = max(prop, float(np.max(np.abs(gm.geometric - SPHERE_MASS))))
        F.cache.clear()
        E.cache.clear()
    ok = worst <= 1e-8 and prop <= 1e-8 and q_ok
    assert report(6, ok, f"formula vs Galerkin {worst:.1e} on 20 pairs (tol 1e-8); "
                         f"sphere geometric-mass identity {prop:.1e} (tol 1e-8); Q'_0 = 8: {q_ok}")


def test_criterion_7_minimizer():
    t0 = time.perf_counter()
    mgrid = build_grid(24, 72)
    cfg = MinimizerConfig(degree=DEG)
    j_err = spread = resid = 0.0
    flagged = False
    for i in range(10):
        u = random_coefficients(rng_for(7, i), 4, DEG)
        state = minimize(cfg, DensityField.from_log_coefficients(u * 0.5, mgrid))
        rep = final_report(state, DEG)
        j_err = max(j_err, abs(rep["J"] - SPHERE_TOTAL_MASS))
        spread = max(spread, rep["mass_spread"])
        resid = max(resid, rep["lhls_residual"])
        flagged |= state.flagged
    dt = time.perf_counter() - t0
    ok = j_err <= 1e-3 and spread <= 1e-3 and resid <= 1e-4 and dt < 300 and not flagged
    assert report(7, ok, f"10 starts: max |J - ln2/4| {j_err:.1e} (tol 1e-3), mass spread "
                         f"{spread:.1e} (tol 1e-3), lhls residual {resid:.1e} (tol 1e-4); "
                         f"runtime {dt:.0f}s (limit 300s)")


def test_criterion_8_heisenberg():
    rows = refinement_study()
    deficits = [r["deficit"] for r in rows]
    desk = deficits[1]
    decreasing = all(b < a for a, b in zip(deficits, deficits[1:]))
    g = cayley_density_grid(HeisGrid.tan_mapped(16, 24, 1.3, 1.4)).normalized()
    j0 = j_heisenberg(g)
    scale_err = max(abs(j_heisenberg(g.dilated(lam)) - j0) for lam in (0.5, 2.0, 3.7))
    r = rng_for(8)
    v = r.standard_normal((2000, 3))
    pts = [HeisPoint(complex(a, b), c) for a, b, c in v]
    cay = max(abs(sphere_distance(cayley(w), cayley(q))
                  - koranyi_distance(w, q) * cayley_distance_factor(w) * cayley_distance_factor(q))
              for w, q in zip(pts[::2], pts[1::2]))
    ok = desk <= 1e-2 and decreasing and scale_err <= 1e-8 and cay <= 1e-12
    levels = ", ".join(f"{r['n_xy']}x{r['n_xy']}x{r['n_t']}: {r['deficit']:.4f}" for r in rows)
    assert report(8, ok, f"deficits [{levels}] desk {desk:.4f} (tol 1e-2), decreasing={decreasing}; "
                         f"scaling drift {scale_err:.1e} (tol 1e-8); Cayley relation {cay:.1e} "
                         f"on 1000 pairs (tol 1e-12)")


def test_criterion_9_trace_trend():
    deg = 48
    g48 = grid_for_degree(deg)
    ks = (50, 200, 800)
    base = {k: float(np.sum(1 / sphere_eigenvalues(k, deg))) for k in ks}
    worst = 0.0
    lines = []
    for i in range(5):
        E = extremal_density(random_aut_params(rng_for(9, i), 0.5), g48)
        rhs = lhls_residual(E, deg)
        errs = [abs(truncated_trace_difference(E, k, deg) - rhs) / base[k] for k in ks]
        worst = max(worst, errs[-1])
        lines.append("/".join(f"{e:.1e}" for e in errs))
        E.cache.clear()
    # a non-extremal frame, where the right-hand side is nonzero, shows the approach itself
    R = random_density(g48, 9, 0)
    rhs = lhls_residual(R, deg)
    approach = "/".join(f"{truncated_trace_difference(R, k, deg) / rhs:.3f}" for k in ks)
    ok = worst <= 0.05
    report(9, ok, f"J={deg}; extremal frames |diff - rhs| / sum_k 1/lambda_k(theta_0) at "
                  f"K=50/200/800: {'; '.join(lines)}; worst at K=800 {worst:.3f} (target 0.05); "
                  f"random frame diff/rhs at K=50/200/800: {approach}", fatal=False)
    assert np.isfinite(worst)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
