"""Points, distances, quadrature and the automorphism Jacobians on (S^3, theta_0).

Points are pairs (zeta1, zeta2) in C^2 with |zeta1|^2 + |zeta2|^2 = 1.  Hopf
coordinates

    zeta1 = cos(eta) exp(i xi1),   zeta2 = sin(eta) exp(i xi2)

separate every monomial into a polynomial in x = cos(eta)^2 times a pure phase,
which is what the product quadrature exploits.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import lgamma
import math

import numpy as np

from .constants import VOLUME
from .errors import InvalidInputError

UNIT_NORM_TOL = 1e-9


@dataclass(frozen=True)
class SpherePoint:
    zeta1: complex
    zeta2: complex

    def __post_init__(self):
        object.__setattr__(self, "zeta1", complex(self.zeta1))
        object.__setattr__(self, "zeta2", complex(self.zeta2))
        norm2 = abs(self.zeta1) ** 2 + abs(self.zeta2) ** 2
        if abs(norm2 - 1.0) > UNIT_NORM_TOL:
            raise InvalidInputError(f"point is off the unit sphere: |zeta|^2 = {norm2!r}")

    @classmethod
    def from_hopf(cls, eta, xi1, xi2):
        return cls(math.cos(eta) * np.exp(1j * xi1), math.sin(eta) * np.exp(1j * xi2))

    def __neg__(self):
        return SpherePoint(-self.zeta1, -self.zeta2)

    def as_array(self):
        return np.array([self.zeta1, self.zeta2])


def _check_unit(z1, z2):
    norm2 = np.abs(z1) ** 2 + np.abs(z2) ** 2
    if np.any(np.abs(norm2 - 1.0) > UNIT_NORM_TOL):
        raise InvalidInputError("points are off the unit sphere")


def hermitian_product(z1, z2, w1, w2):
    """zeta . conj(eta), elementwise over arrays."""
    return z1 * np.conj(w1) + z2 * np.conj(w2)


def distance_arrays(z1, z2, w1, w2):
    """Vectorized d(zeta, eta) = sqrt(2 |1 - zeta . conj(eta)|)."""
    return np.sqrt(2.0 * np.abs(1.0 - hermitian_product(z1, z2, w1, w2)))


def sphere_distance(p, q):
    """Horizontal gauge distance d(p, q)^2 = 2 |1 - p . conj(q)| on S^3."""
    return float(distance_arrays(p.zeta1, p.zeta2, q.zeta1, q.zeta2))


def random_points(rng, n):
    """n points distributed uniformly on S^3, as two complex arrays."""
    g = rng.standard_normal((n, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, 0] + 1j * g[:, 1], g[:, 2] + 1j * g[:, 3]


def unitary_to(p):
    """A U(2) matrix sending (1, 0) to p."""
    return np.array([[p.zeta1, -np.conj(p.zeta2)], [p.zeta2, np.conj(p.zeta1)]])


def monomial_integral(a, b, c, d):
    """Exact integral of zeta1^a zeta2^b conj(zeta1)^c conj(zeta2)^d over S^3."""
    if a != c or b != d:
        return 0.0
    return VOLUME * math.exp(lgamma(a + 1) + lgamma(b + 1) - lgamma(a + b + 2))


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Hopf product rule: Gauss-Legendre in x = cos(eta)^2, uniform in xi1 and xi2.

    Node arrays have shape ``(n_eta, n_angle, n_angle)``.  Instances compare by
    identity so per-grid tables can be cached against them.
    """

    n_eta: int
    n_angle: int
    x: np.ndarray = field(repr=False)
    x_weights: np.ndarray = field(repr=False)
    exactness_degree: int

    @property
    def shape(self):
        return (self.n_eta, self.n_angle, self.n_angle)

    @property
    def size(self):
        return self.n_eta * self.n_angle**2

    @cached_property
    def eta(self):
        return np.arccos(np.sqrt(self.x))

    @cached_property
    def xi(self):
        return 2.0 * np.pi * np.arange(self.n_angle) / self.n_angle

    @cached_property
    def cos_eta(self):
        return np.sqrt(self.x)

    @cached_property
    def sin_eta(self):
        return np.sqrt(1.0 - self.x)

    @cached_property
    def ring_weights(self):
        """Weight of every node on the eta-ring k; the angular rule is uniform."""
        return 0.5 * self.x_weights * (2.0 * np.pi / self.n_angle) ** 2

    @cached_property
    def weights(self):
        return np.broadcast_to(self.ring_weights[:, None, None], self.shape)

    @cached_property
    def zeta1(self):
        phase = np.exp(1j * self.xi)
        return np.broadcast_to(self.cos_eta[:, None, None] * phase[None, :, None], self.shape)

    @cached_property
    def zeta2(self):
        phase = np.exp(1j * self.xi)
        return np.broadcast_to(self.sin_eta[:, None, None] * phase[None, None, :], self.shape)

    def integrate(self, values):
        values = np.asarray(values)
        return float(np.einsum("k,kij->", self.ring_weights, np.broadcast_to(values, self.shape)))

    def evaluate(self, func):
        """Sample ``func(zeta1, zeta2)`` on the nodes."""
        return np.broadcast_to(func(self.zeta1, self.zeta2), self.shape).copy()


def build_grid(n_eta, n_angle):
    """Hopf product grid; exact for monomials of total degree <= ``exactness_degree``.

    A monomial of total degree D carries phase frequencies up to D, so the
    uniform rules need ``n_angle > D``; after the phases cancel the integrand is
    a polynomial of degree D/2 in x, integrated exactly when ``D/2 <= 2 n_eta - 1``.
    """
    if int(n_eta) != n_eta or int(n_angle) != n_angle or n_eta < 1 or n_angle < 1:
        raise InvalidInputError("grid sizes must be positive integers")
    n_eta, n_angle = int(n_eta), int(n_angle)
    t, w = np.polynomial.legendre.leggauss(n_eta)
    x = 0.5 * (t + 1.0)
    exactness = min(4 * n_eta - 2, n_angle - 1)
    return QuadratureGrid(n_eta, n_angle, x, 0.5 * w, exactness)


def grid_for_degree(degree):
    """Default grid for a degree-``degree`` truncation.

    Products of two basis functions have degree 2J; the extra factor of two
    leaves room for a smooth density weight in Gram integrals.
    """
    degree = max(int(degree), 2)
    return build_grid(degree + 8, 4 * degree)


@dataclass(frozen=True)
class AutSphereParams:
    """Parameters of |J_k| = scale / |1 - w . zeta|^4, |w| < 1."""

    scale: float
    w: tuple

    def __post_init__(self):
        w = tuple(complex(c) for c in self.w)
        if len(w) != 2:
            raise InvalidInputError("w must have two complex components")
        object.__setattr__(self, "w", w)
        if not self.scale > 0:
            raise InvalidInputError("scale must be positive")
        if abs(w[0]) ** 2 + abs(w[1]) ** 2 >= 1.0:
            raise InvalidInputError("|w| must be < 1")


def jacobian_sphere_automorphism(params, p):
    """|J_k|(p) = scale / |1 - w . zeta|^4 (bilinear, unconjugated pairing)."""
    return float(jk_values(params, p.zeta1, p.zeta2))


def jk_values(params, z1, z2):
    w1, w2 = params.w
    return params.scale / np.abs(1.0 - (w1 * z1 + w2 * z2)) ** 4


def log_jk_series(params, z1, z2, order):
    """Truncated Taylor series of log|J_k|: ln C + 4 Re sum_{n<=order} (w.zeta)^n / n."""
    w1, w2 = params.w
    s = w1 * z1 + w2 * z2
    total = np.zeros(np.broadcast(z1, z2).shape, dtype=complex)
    power = np.ones_like(total)
    for n in range(1, order + 1):
        power = power * s
        total += power / n
    return math.log(params.scale) + 4.0 * total.real


def normalize_to_volume(F, target=VOLUME):
    """Rescale a DensityField so its quadrature volume equals ``target``."""
    if np.any(F.values <= 0):
        raise InvalidInputError("density must be strictly positive on every node")
    return F.scaled(target / F.volume)


# -- serialization ----------------------------------------------------------

def _grid_rows(grid):
    eta, xi = grid.eta, grid.xi
    E, X1, X2 = np.meshgrid(eta, xi, xi, indexing="ij")
    return np.column_stack([E.ravel(), X1.ravel(), X2.ravel(), np.asarray(grid.weights).ravel()])


def _header(grid):
    return (f"# crmass-grid n_eta={grid.n_eta} n_angle={grid.n_angle} "
            f"exactness_degree={grid.exactness_degree}")


def save_grid(grid, path):
    """Write (eta, xi1, xi2, weight) rows; CSV for ``.csv`` paths, flat float64 otherwise."""
    path = str(path)
    rows = _grid_rows(grid)
    if path.endswith(".csv"):
        with open(path, "w") as fh:
            fh.write(_header(grid) + "\n")
            fh.write("eta,xi1,xi2,weight\n")
            np.savetxt(fh, rows, delimiter=",", fmt="%.17g")
    else:
        with open(path, "wb") as fh:
            fh.write((_header(grid) + "\n").encode())
            fh.write(np.ascontiguousarray(rows, dtype="<f8").tobytes())


def _parse_header(line):
    fields = dict(tok.split("=") for tok in line.split()[2:])
    return int(fields["n_eta"]), int(fields["n_angle"]), int(fields["exactness_degree"])


def load_grid(path):
    """Rebuild a grid from a file written by :func:`save_grid`; rows are checked."""
    path = str(path)
    if path.endswith(".csv"):
        with open(path) as fh:
            n_eta, n_angle, degree = _parse_header(fh.readline())
            rows = np.loadtxt(fh, delimiter=",", skiprows=1)
    else:
        with open(path, "rb") as fh:
            n_eta, n_angle, degree = _parse_header(fh.readline().decode())
            rows = np.frombuffer(fh.read(), dtype="<f8").reshape(-1, 4)
    grid = build_grid(n_eta, n_angle)
    if grid.exactness_degree != degree or not np.allclose(rows, _grid_rows(grid), rtol=0, atol=1e-14):
        raise InvalidInputError(f"{path}: grid rows do not match the Hopf rule in the header")
    return grid
