"""Scalar functionals of a conformal factor F on (S^3, theta_0).

    entropy            int F ln F
    quadratic          (1/V_F) int F A^{-1} tau F
    J(F)               V_F m_0 + (GAMMA3/4) entropy - quadratic
    lhls_residual      (GAMMA3/4) entropy - quadratic       (requires V_F = V)

All quadratic forms are evaluated by Parseval on the truncated basis, so they
use exactly the same quadrature numbers as the mass module.
"""

from dataclasses import dataclass, asdict
import csv
import json
import math

import numpy as np

from .constants import GAMMA3, LAMBDA1, MT_KAPPA, SPHERE_MASS, VOLUME
from .errors import InvalidInputError
from .kernels import sphere_ball_masses
from .plh import DensityField, random_coefficients, synthesize, project_tau
from .spectral import apply_A, apply_A_fracpower
from .sphere import AutSphereParams, jk_values, normalize_to_volume

VOLUME_RTOL = 1e-10


def rng_for(seed, index=0):
    """Counter-based generator: sample ``index`` of ``seed`` never depends on evaluation order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


@dataclass
class FunctionalBreakdown:
    mass_term: float
    entropy_term: float
    quadratic_term: float
    total: float
    volume: float

    def to_dict(self):
        return asdict(self)


def entropy(F):
    return F.grid.integrate(F.values * F.log_values)


def bilinear(F, G, degree):
    """int F A^{-1} tau G; symmetric in F and G."""
    return F.projection(degree).dot(G.potential(degree))


def quadratic(F, degree):
    return F.projection(degree).dot(F.potential(degree)) / F.volume


def j_functional(F, degree):
    VF = F.volume
    mass_term = SPHERE_MASS * VF
    ent = 0.25 * GAMMA3 * entropy(F)
    quad = quadratic(F, degree)
    return FunctionalBreakdown(mass_term, ent, quad, mass_term + ent - quad, VF)


def _check_volume(F):
    if abs(F.volume - VOLUME) > VOLUME_RTOL * VOLUME:
        raise InvalidInputError(f"V_F = {F.volume!r} differs from V; renormalize first")


def lhls_residual(F, degree):
    _check_volume(F)
    return 0.25 * GAMMA3 * entropy(F) - quadratic(F, degree)


def fractional_quadratic(F, eps, degree, volume=None):
    """(1 - eps) lambda_1^eps / V_F * int F A^{-1-eps} tau F.

    ``volume`` replaces V_F in the prefactor when given.
    """
    c = F.projection(degree)
    VF = F.volume if volume is None else volume
    return (1.0 - eps) * LAMBDA1**eps * c.dot(apply_A_fracpower(1.0 + eps, c)) / VF


def j_epsilon(F, eps, degree, volume=None):
    """Sub-critical functional J_eps; ``volume`` freezes the 1/V_F prefactor (for
    differentiating across the volume constraint)."""
    if not 0.0 < eps < 1.0:
        raise InvalidInputError("eps must lie in (0, 1)")
    return (SPHERE_MASS * F.volume + 0.25 * GAMMA3 * entropy(F)
            - fractional_quadratic(F, eps, degree, volume))


def mt_residual(u, grid, kappa=MT_KAPPA):
    """kappa <u, A u>/V + mean(u) - ln mean(e^u) for a pluriharmonic u."""
    vals = synthesize(u, grid)
    top = float(np.max(vals))
    log_mean_exp = top + math.log(grid.integrate(np.exp(vals - top)) / VOLUME)
    return kappa * u.dot(apply_A(u)) / VOLUME + u.mean() - log_mean_exp


def mt_gradient_terms(u, grid):
    """Nonconstant parts of (2/V) A u and of e^u / int e^u, the two sides of the
    stationarity condition of ``mt_residual`` (the constant mode cancels)."""
    e = np.exp(synthesize(u, grid))
    g = project_tau(e / grid.integrate(e), grid, u.max_degree).without_constant()
    b = apply_A(u) * (2.0 / VOLUME)
    return b, g


def calibrate_mt_constant(params_list, grid, degree):
    """Least-squares kappa making the gradient of ``mt_residual`` vanish at u = ln|J_k|.

    Returns (kappa, relative residual of the fit).
    """
    num = den = res = 0.0
    pairs = []
    for prm in params_list:
        u = project_tau(np.log(grid.evaluate(lambda a, b: jk_values(prm, a, b))), grid, degree)
        b, g = mt_gradient_terms(u, grid)
        num += b.dot(g)
        den += b.dot(b)
        pairs.append((b, g))
    if den == 0.0:
        raise InvalidInputError("calibration needs at least one non-constant extremal")
    kappa = num / den
    res = math.sqrt(sum((b * kappa - g).dot(b * kappa - g) for b, g in pairs)
                    / sum(g.dot(g) for _, g in pairs))
    return kappa, res


def concentration_ratio(F, delta, centers=None):
    """max over centres p of (integral of F over B_delta(p)) / V_F.

    ``centers`` is a pair of complex arrays; by default every node of F's
    grid is a centre, which is quadratic in the grid size.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidInputError("delta must lie in (0, 1)")
    g = F.grid
    z1 = np.ascontiguousarray(g.zeta1).ravel()
    z2 = np.ascontiguousarray(g.zeta2).ravel()
    w = (np.asarray(g.weights) * F.values).ravel()
    if centers is None:
        c1, c2 = z1, z2
    else:
        c1 = np.ravel(np.asarray(centers[0], dtype=complex))
        c2 = np.ravel(np.asarray(centers[1], dtype=complex))
    masses = sphere_ball_masses(c1, c2, z1, z2, w, 0.5 * delta * delta)
    return float(min(np.max(masses) / F.volume, 1.0))


def weak_constant_probe(samples, degree):
    """Empirical sup of quadratic - (GAMMA3/4) entropy over normalized samples."""
    out = -math.inf
    for F in samples:
        _check_volume(F)
        out = max(out, quadratic(F, degree) - 0.25 * GAMMA3 * entropy(F))
    return out


def relative_entropy(F):
    """int F ln(F / sigma_F) with sigma_F = V_F / V."""
    sigma = F.volume / VOLUME
    return F.grid.integrate(F.values * (F.log_values - math.log(sigma)))


def bilinear_gap(Q, R, degree):
    """(GAMMA3/8)(sigma_R Ent(Q) + sigma_Q Ent(R)) - (1/V) int Q A^{-1} tau R; >= 0 on S^3."""
    sq, sr = Q.volume / VOLUME, R.volume / VOLUME
    rhs = 0.125 * GAMMA3 * (sr * relative_entropy(Q) + sq * relative_entropy(R))
    return rhs - bilinear(Q, R, degree) / VOLUME


def sup_bound_ratio(F, eps, degree):
    """||A^{-1} tau F||_inf / ((1+eps)(GAMMA3/4) Ent(F)); a monitored diagnostic."""
    pot = synthesize(F.potential(degree), F.grid)
    ent = entropy(F)
    if ent <= 0:
        return math.inf
    return float(np.max(np.abs(pot))) / ((1.0 + eps) * 0.25 * GAMMA3 * ent)


# -- ensembles ---------------------------------------------------------------

def random_log_density(grid, seed, index=0, degree=6, amplitude=2.0, max_degree=None):
    """A seeded pluriharmonic u of degree <= ``degree`` with sup norm in
    [amplitude/4, amplitude] on the grid, shifted so that e^u has volume V.

    Returns (u, F) with F = exp(u) as a DensityField.
    """
    rng = rng_for(seed, index)
    max_degree = degree if max_degree is None else max_degree
    u = random_coefficients(rng, degree, max_degree)
    sup = float(np.max(np.abs(synthesize(u, grid))))
    u = u * (amplitude * rng.uniform(0.25, 1.0) / sup)
    F = DensityField.from_log_coefficients(u, grid)
    u.const -= math.log(F.volume / VOLUME) * math.sqrt(VOLUME)
    return u, DensityField.from_log_coefficients(u, grid)


def random_density(grid, seed, index=0, degree=6, amplitude=2.0):
    return random_log_density(grid, seed, index, degree, amplitude)[1]


def random_aut_params(rng, rmax=0.7):
    """Uniform w in the ball |w| <= rmax of C^2, scale 1."""
    v = rng.standard_normal(4)
    v *= rmax * rng.uniform() ** 0.25 / np.linalg.norm(v)
    return AutSphereParams(1.0, (complex(v[0], v[1]), complex(v[2], v[3])))


def extremal_density(params, grid):
    """|J_k| normalized to volume V."""
    return normalize_to_volume(DensityField.from_function(grid, lambda a, b: jk_values(params, a, b)))


@dataclass
class SweepRow:
    seed: int
    index: int
    volume: float
    entropy: float
    quadratic: float
    residual: float
    ratio: float


def lhls_sweep(grid, degree, n, seed, u_degree=6, amplitude=2.0):
    """LHLS residuals on ``n`` seeded random densities.

    ``ratio`` is quadratic / ((GAMMA3/4) entropy), at most 1 on the sphere.
    """
    rows = []
    for i in range(n):
        F = random_density(grid, seed, i, u_degree, amplitude)
        ent = entropy(F)
        quad = quadratic(F, degree)
        res = 0.25 * GAMMA3 * ent - quad
        ratio = quad / (0.25 * GAMMA3 * ent) if ent > 0 else 0.0
        rows.append(SweepRow(seed, i, F.volume, ent, quad, res, ratio))
    return rows


def sweep_summary(rows):
    r = np.array([row.residual for row in rows])
    return {"n": len(rows), "min_residual": float(r.min()), "max_residual": float(r.max()),
            "mean_residual": float(r.mean())}


def write_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "index", "V_F", "entropy", "quadratic", "residual", "ratio"])
        for r in rows:
            w.writerow([r.seed, r.index] + [repr(float(x)) for x in
                                            (r.volume, r.entropy, r.quadratic, r.residual, r.ratio)])


def write_sweep_json(path, rows, extra=None):
    data = sweep_summary(rows)
    if extra:
        data.update(extra)
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
