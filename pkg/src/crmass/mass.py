"""Green's function, Robin mass and their conformal transformation on S^3.

Conventions: A G(x, .) = delta_x - 1/V and G is mean-zero in each slot, so
integrating G(p, .) against u gives A^{-1} tau u (p).  Near the diagonal
G(p, q) = -GAMMA3 ln d(p, q) + m(p) + o(1).
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .constants import GAMMA3, SPHERE_MASS, Q_PRIME_SPHERE
from .errors import InvalidInputError
from .plh import PlhCoefficients, SQRT_V, project_tau, synthesize, synthesize_at
from .sphere import SpherePoint, hermitian_product, distance_arrays, unitary_to
from .spectral import conformal_gram, conformal_inverse_apply, galerkin_inverse, real_eigenvalues

GREEN_SCALE = 1.0 / (8.0 * math.pi**2)
COINCIDENT_TOL = 1e-14


def green_arrays(z1, z2, w1, w2):
    """-(1/(8 pi^2)) ln|1 - zeta . conj(eta)| elementwise."""
    return -GREEN_SCALE * np.log(np.abs(1.0 - hermitian_product(z1, z2, w1, w2)))


def green_sphere(p, q):
    if abs(1.0 - hermitian_product(p.zeta1, p.zeta2, q.zeta1, q.zeta2)) < COINCIDENT_TOL:
        raise InvalidInputError("Green's function is singular at coincident points")
    return float(green_arrays(p.zeta1, p.zeta2, q.zeta1, q.zeta2))


def _euler_tail(u, start, terms):
    """sum_{j >= start} u^j / j by the Euler transform of the tail.

    sum_{j>=N} u^j f(j) = u^N/(1-u) sum_k r^k Delta^k f(N) with r = u/(1-u),
    and Delta^k (1/j) at N equals (-1)^k k! / (N (N+1) ... (N+k)).
    """
    r = u / (1.0 - u)
    total = 0j
    coef = 1.0 / start
    for k in range(terms):
        total += r**k * coef
        coef *= -(k + 1) / (start + k + 1)
    return u**start / (1.0 - u) * total


def spectral_green(p, q, degree, tail_terms=0):
    """sum_{1<=j<=J} zonal_kernel(j, p, q) / nu(j), optionally with an Euler tail estimate.

    The degree-j term reduces to Re(u^j / j) / (8 pi^2) with u = zeta . conj(eta).
    The raw sum converges geometrically when |u| < 1; on a common Hopf fibre
    |u| = 1 and the tail estimate is what makes J = 200 accurate.
    """
    u = complex(hermitian_product(p.zeta1, p.zeta2, q.zeta1, q.zeta2))
    j = np.arange(1, degree + 1)
    total = np.sum(u**j / j)
    if tail_terms:
        total += _euler_tail(u, degree + 1, tail_terms)
    return GREEN_SCALE * float(total.real)


def robin_mass_sphere():
    """lim_{q->p} G(p,q) + GAMMA3 ln d(p,q) from the closed form; independent of p.

    With d^2 = 2|1-u| the two logarithms cancel except for GAMMA3 ln(2)/2.
    """
    return 0.5 * GAMMA3 * math.log(2.0)


def richardson(values, ratio=2.0, orders=(1, 2)):
    """Extrapolate samples taken at h, h/ratio, h/ratio^2, ... to h -> 0."""
    vals = list(map(float, values))
    for p in orders:
        f = ratio**p
        vals = [(f * b - a) / (f - 1.0) for a, b in zip(vals, vals[1:])]
    if len(vals) != 1:
        raise InvalidInputError("need len(orders) + 1 samples")
    return vals[0]


def robin_mass_extrapolated(degree=200, distances=(1.4, 0.7, 0.35), p=None):
    """Robin mass from truncated spectral sums at shrinking distances, Richardson-extrapolated.

    The truncation error of the sum behaves like u^J / (J (1 - u)) with
    1 - u = d^2/2; the default distances keep it near 1e-8 at J = 200.
    """
    p = SpherePoint(1.0, 0.0) if p is None else p
    U = unitary_to(p)
    samples = []
    for d in distances:
        s = 2.0 * math.asin(0.5 * d)
        q = U @ np.array([math.cos(s), math.sin(s)])
        qp = SpherePoint(q[0], q[1])
        samples.append(spectral_green(p, qp, degree) + GAMMA3 * math.log(d))
    return richardson(samples, ratio=distances[0] / distances[1], orders=range(1, len(distances)))


# -- singular quadrature -----------------------------------------------------

def _sigmoid_rule(n, power=3):
    """Gauss-Legendre on [0, 1] pushed through a sigmoidal map that clusters both ends."""
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    a, b = t**power, (1.0 - t) ** power
    s = a / (a + b)
    ds = power * (t ** (power - 1) * b + a * (1.0 - t) ** (power - 1)) / (a + b) ** 2
    return s, w * ds


def polar_rule(p, n_radial=96, n_angle=64):
    """Quadrature on S^3 whose radial direction is centred at p.

    After a U(2) rotation taking (1, 0) to p, write zeta1 = 1 - rho e^{i phi},
    zeta2 = sqrt(1 - |zeta1|^2) e^{i xi2}.  The measure is dA(zeta1) dxi2 and
    rho = 2 cos(phi) sin(beta)^2 sweeps the disc, so the Jacobian
    8 cos(phi)^2 sin(beta)^3 cos(beta) vanishes to third order at p.  Both
    interior variables use a sigmoidal Gauss rule; xi2 is uniform.

    Returns (z1, z2, weights, dist) with dist = d(p, node).
    """
    s, ws = _sigmoid_rule(n_radial)
    phi = (s - 0.5) * math.pi
    wphi = ws * math.pi
    beta = 0.5 * math.pi * s
    wbeta = 0.5 * math.pi * ws
    xi2 = 2.0 * math.pi * np.arange(n_angle) / n_angle
    PH, BE, XI = np.meshgrid(phi, beta, xi2, indexing="ij")
    rho = 2.0 * np.cos(PH) * np.sin(BE) ** 2
    u1 = 1.0 - rho * np.exp(1j * PH)
    u2 = np.sqrt(np.clip(1.0 - np.abs(u1) ** 2, 0.0, None)) * np.exp(1j * XI)
    jac = 8.0 * np.cos(PH) ** 2 * np.sin(BE) ** 3 * np.cos(BE)
    w = wphi[:, None, None] * wbeta[None, :, None] * jac * (2.0 * math.pi / n_angle)
    U = unitary_to(p)
    z1 = U[0, 0] * u1 + U[0, 1] * u2
    z2 = U[1, 0] * u1 + U[1, 1] * u2
    dist = np.sqrt(2.0 * rho)
    return z1.ravel(), z2.ravel(), w.ravel(), dist.ravel()


def green_mean(p, n_radial=96, n_angle=64, density=None):
    """Integral of G(p, .) (times ``density`` if given) over S^3 with the polar rule."""
    z1, z2, w, _ = polar_rule(p, n_radial, n_angle)
    vals = green_arrays(p.zeta1, p.zeta2, z1, z2)
    if density is not None:
        vals = vals * density(z1, z2)
    return float(np.dot(w, vals))


# -- conformal frames ------------------------------------------------------------

@dataclass
class MassReport:
    """Pointwise Robin mass on the grid and the total mass of the frame.

    ``total`` integrates ``field`` against the frame's volume element
    ``frame_values * dv_theta0``.
    """

    field: np.ndarray
    total: float
    method: str
    frame_values: np.ndarray = field(repr=False, default=None)

    @property
    def min(self):
        return float(np.min(self.field))

    @property
    def max(self):
        return float(np.max(self.field))

    def to_json(self, field_csv_path=None):
        return json.dumps({"method": self.method, "total_mass": self.total, "min": self.min,
                           "max": self.max, "field_csv_path": field_csv_path}, sort_keys=True)

    def write_field_csv(self, path, grid):
        E, X1, X2 = np.meshgrid(grid.eta, grid.xi, grid.xi, indexing="ij")
        rows = np.column_stack([E.ravel(), X1.ravel(), X2.ravel(), self.field.ravel()])
        np.savetxt(path, rows, delimiter=",", header="eta,xi1,xi2,mass", comments="", fmt="%.17g")


def sphere_mass_report(grid):
    m = np.full(grid.shape, SPHERE_MASS)
    return MassReport(m, grid.integrate(m), "closed_form", np.ones(grid.shape))


def quadratic_integral(F, degree):
    """Integral of F A^{-1} tau F, by Parseval."""
    return F.projection(degree).dot(F.potential(degree))


def mass_transform(F, degree, base=None):
    """Robin mass of theta_F by the four-term transformation law.

    Parameters
    ----------
    F : DensityField
        Conformal factor relative to the current frame.
    degree : int
        Truncation degree for A^{-1} tau.
    base : DensityField, optional
        Current frame theta_B = B^{1/2} theta_0.  When given, its mass is
        transported first and the potential is A_{theta_B}^{-1} tau_B F, so the
        result describes theta_{BF}.
    """
    grid = F.grid
    if base is None:
        m0 = np.full(grid.shape, SPHERE_MASS)
        weight = np.ones(grid.shape)
        pot = F.potential(degree)
    else:
        m0 = mass_transform(base, degree).field
        weight = base.values
        pot = conformal_inverse_apply(base, F.values, degree)
    frame = weight * F.values
    VF = grid.integrate(frame)
    pot_vals = synthesize(pot, grid)
    q = grid.integrate(frame * pot_vals)
    m = m0 + 0.25 * GAMMA3 * F.log_values - (2.0 / VF) * pot_vals + q / VF**2
    return MassReport(m, grid.integrate(m * frame), "transported", frame)


def green_conformal(F, p, q, degree):
    """G_{theta_F}(p, q) from the four-term formula; p != q."""
    pot = F.potential(degree)
    VF = F.volume
    qf = quadratic_integral(F, degree)
    phi_p = synthesize_at(pot, p.zeta1, p.zeta2)
    phi_q = synthesize_at(pot, q.zeta1, q.zeta2)
    return float(green_sphere(p, q) - phi_q / VF + qf / VF**2 - phi_p / VF)


def green_conformal_mean(F, p, degree, n_radial=96, n_angle=64):
    """Integral of G_F(p, .) F dv with the polar rule; needs F's evaluator."""
    pot = F.potential(degree)
    VF = F.volume
    qf = quadratic_integral(F, degree)
    z1, z2, w, _ = polar_rule(p, n_radial, n_angle)
    phi_p = float(synthesize_at(pot, p.zeta1, p.zeta2))
    vals = (green_arrays(p.zeta1, p.zeta2, z1, z2) - synthesize_at(pot, z1, z2) / VF
            + qf / VF**2 - phi_p / VF)
    return float(np.dot(w, vals * F(z1, z2)))


def singular_limit_mass(F, p, degree, distances=(0.02, 0.01, 0.005)):
    """m_{theta_F}(p) from G_F(p, q) + GAMMA3 ln d_F(p, q) as q -> p.

    d_F is taken as F(p)^{1/4} d; the error of that substitution is O(d) and
    is removed by the Richardson step along with the smooth remainder.
    """
    U = unitary_to(p)
    lnF = math.log(float(F(p.zeta1, p.zeta2)))
    samples = []
    for d in distances:
        s = 2.0 * math.asin(0.5 * d)
        z = U @ np.array([math.cos(s), math.sin(s)])
        q = SpherePoint(z[0], z[1])
        d_exact = float(distance_arrays(p.zeta1, p.zeta2, q.zeta1, q.zeta2))
        samples.append(green_conformal(F, p, q, degree) + GAMMA3 * (math.log(d_exact) + 0.25 * lnF))
    return richardson(samples, ratio=distances[0] / distances[1], orders=range(1, len(distances)))


def pointwise_mass(F, p, degree):
    """m_{theta_F} at an off-grid point, from the transformation law."""
    pot = F.potential(degree)
    VF = F.volume
    phi = float(synthesize_at(pot, p.zeta1, p.zeta2))
    return (SPHERE_MASS + 0.25 * GAMMA3 * math.log(float(F(p.zeta1, p.zeta2)))
            - 2.0 * phi / VF + quadratic_integral(F, degree) / VF**2)


# -- Q' curvature and the geometric mass -------------------------------------

PLURIHARMONIC_LOG_TOL = 1e-6


@dataclass
class GeometricMass:
    q_prime: np.ndarray           # tau_F Q'_{theta_F} on the grid
    mass: MassReport              # Robin mass of the frame
    geometric: np.ndarray         # N_{theta_F} on the grid
    log_residual: float = 0.0     # ||(I - tau) ln F||_2


def q_prime_and_geometric_mass(F, degree, grid=None):
    """tau_F Q' and the geometric mass N = m - (GAMMA3/2) A^{-1} tau Q' of theta_F.

    With ``F`` None the standard frame is returned: Q' = 8 and N = m.
    Otherwise ln F must be pluriharmonic; then tau_F Q'_F is assembled in the
    F-weighted basis from tau_F(F^{-1} Q') + (1/2) A_F ln F and inverted with a
    Galerkin solve.
    """
    if F is None:
        if grid is None:
            raise InvalidInputError("need a grid for the standard frame")
        base = sphere_mass_report(grid)
        return GeometricMass(np.full(grid.shape, Q_PRIME_SPHERE), base, base.field.copy())
    grid = F.grid
    ell = project_tau(F.log_values, grid, degree)
    resid = math.sqrt(grid.integrate((F.log_values - synthesize(ell, grid)) ** 2))
    if resid > PLURIHARMONIC_LOG_TOL:
        raise InvalidInputError(f"ln F is not pluriharmonic: residual {resid:.3g}")
    conformal_gram(F, degree)  # fills the Cholesky factor used below
    # weak-form load: int F (F^{-1} Q') e_i + (1/2) <A ln F, e_i>
    load = 0.5 * real_eigenvalues(degree) * ell.to_real()
    load[0] += Q_PRIME_SPHERE * SQRT_V
    from scipy.linalg import cho_solve
    qcoef = PlhCoefficients.from_real(cho_solve(F.cache[("chol", degree)], load), degree)
    inv = galerkin_inverse(F, load, degree)
    report = mass_transform(F, degree)
    geometric = report.field - 0.5 * GAMMA3 * synthesize(inv, grid)
    return GeometricMass(synthesize(qcoef, grid), report, geometric, resid)


def geometric_mass_shift(F, degree):
    """Closed form of N_{theta_F} - N_{theta_0} on the sphere (a constant)."""
    VF = F.volume
    ent = F.grid.integrate(F.values * F.log_values)
    return 0.25 * GAMMA3 * ent / VF - quadratic_integral(F, degree) / VF**2
