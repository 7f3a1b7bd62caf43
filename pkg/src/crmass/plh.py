"""Pluriharmonic basis on S^3, the projection tau, and sampled densities.

The basis consists of the normalized monomials Y_ab = zeta1^a zeta2^b / n_ab
with n_ab^2 = 2 pi^2 a! b! / (a+b+1)!, their conjugates, and the constant
1/sqrt(2 pi^2).  A real pluriharmonic field is stored by its constant
coefficient and its holomorphic coefficients; the antiholomorphic ones are the
conjugates, so

    f = c0 / sqrt(V) + 2 Re sum_h c_h Y_h.

Holomorphic indices are ordered by degree j = 1..J, then by a = 0..j.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import lgamma
import json
import math

import numpy as np

from .constants import VOLUME, eigenvalue
from .errors import InvalidInputError, UnderResolutionError

SQRT_V = math.sqrt(VOLUME)

HOLOMORPHIC = "holomorphic"
ANTIHOLOMORPHIC = "antiholomorphic"
CONSTANT = "constant"
_KINDS = (HOLOMORPHIC, ANTIHOLOMORPHIC, CONSTANT)


@dataclass(frozen=True)
class PlhBasisIndex:
    kind: str
    a: int = 0
    b: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidInputError(f"unknown basis kind {self.kind!r}")
        if self.a < 0 or self.b < 0:
            raise InvalidInputError("monomial exponents must be nonnegative")
        if (self.kind == CONSTANT) != (self.a + self.b == 0):
            raise InvalidInputError("the constant index is exactly a = b = 0")

    @property
    def degree(self):
        return self.a + self.b


def n_holo(degree):
    """Number of holomorphic indices of degree 1..J."""
    return degree * (degree + 3) // 2


def holo_position(a, b):
    j = a + b
    return n_holo(j - 1) + a


def log_norm(a, b):
    """ln n_ab."""
    return 0.5 * (math.log(VOLUME) + lgamma(a + 1) + lgamma(b + 1) - lgamma(a + b + 2))


@lru_cache(maxsize=None)
def basis_table(degree):
    """Exponent arrays (a, b, j) and ln n_ab for holomorphic indices up to ``degree``."""
    a = np.array([a for j in range(1, degree + 1) for a in range(j + 1)], dtype=np.int64)
    j = np.array([j for j in range(1, degree + 1) for _ in range(j + 1)], dtype=np.int64)
    b = j - a
    ln = 0.5 * (math.log(VOLUME) + np.array([lgamma(x + 1) + lgamma(y + 1) - lgamma(x + y + 2)
                                             for x, y in zip(a, b)]))
    for arr in (a, b, j, ln):
        arr.setflags(write=False)
    return a, b, j, ln


def holo_eigenvalues(degree):
    return eigenvalue(basis_table(degree)[2])


class PlhCoefficients:
    """Coefficients of a real pluriharmonic field truncated at degree J.

    Parameters
    ----------
    max_degree : int
    const : float
        Coefficient of the normalized constant 1/sqrt(V).
    holo : complex array of length ``n_holo(max_degree)``
    """

    __slots__ = ("max_degree", "const", "holo")

    def __init__(self, max_degree, const=0.0, holo=None):
        self.max_degree = int(max_degree)
        if self.max_degree < 0:
            raise InvalidInputError("max_degree must be >= 0")
        self.const = float(np.real(const))
        if abs(np.imag(const)) > 0:
            raise InvalidInputError("the constant coefficient must be real")
        n = n_holo(self.max_degree)
        if holo is None:
            holo = np.zeros(n, dtype=complex)
        holo = np.asarray(holo, dtype=complex)
        if holo.shape != (n,):
            raise InvalidInputError(f"expected {n} holomorphic coefficients, got {holo.shape}")
        self.holo = holo

    @classmethod
    def zeros(cls, max_degree):
        return cls(max_degree)

    @classmethod
    def unit(cls, idx, max_degree):
        """The field whose only nonzero coefficient sits at ``idx`` (and its mirror)."""
        c = cls(max_degree)
        if idx.kind == CONSTANT:
            c.const = 1.0
        else:
            c.holo[holo_position(idx.a, idx.b)] = 1.0
        return c

    # -- coefficient access --------------------------------------------------
    def __getitem__(self, idx):
        if idx.kind == CONSTANT:
            return complex(self.const)
        if idx.degree > self.max_degree:
            return 0j
        c = self.holo[holo_position(idx.a, idx.b)]
        return complex(c if idx.kind == HOLOMORPHIC else np.conj(c))

    @property
    def degrees(self):
        return basis_table(self.max_degree)[2]

    def copy(self):
        return PlhCoefficients(self.max_degree, self.const, self.holo.copy())

    def truncate(self, max_degree):
        """Restrict (or zero-pad) to another truncation degree."""
        out = PlhCoefficients(max_degree, self.const)
        n = min(len(self.holo), len(out.holo))
        out.holo[:n] = self.holo[:n]
        return out

    def without_constant(self):
        return PlhCoefficients(self.max_degree, 0.0, self.holo.copy())

    # -- linear structure ----------------------------------------------------
    def _check(self, other):
        if self.max_degree != other.max_degree:
            raise InvalidInputError("coefficient vectors have different truncation degrees")

    def __add__(self, other):
        self._check(other)
        return PlhCoefficients(self.max_degree, self.const + other.const, self.holo + other.holo)

    def __sub__(self, other):
        self._check(other)
        return PlhCoefficients(self.max_degree, self.const - other.const, self.holo - other.holo)

    def __mul__(self, s):
        s = float(s)
        return PlhCoefficients(self.max_degree, s * self.const, s * self.holo)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def scale_by_degree(self, factors, const_factor=0.0):
        """Multiply the degree-j block by ``factors[j-1]``; the constant by ``const_factor``."""
        factors = np.asarray(factors, dtype=float)
        return PlhCoefficients(self.max_degree, const_factor * self.const,
                               self.holo * factors[self.degrees - 1])

    def dot(self, other):
        """Real L^2 inner product of the two fields."""
        self._check(other)
        return self.const * other.const + 2.0 * float(np.real(np.vdot(self.holo, other.holo)))

    def norm(self):
        return math.sqrt(self.dot(self))

    def mean(self):
        """(1/V) * integral of the field."""
        return self.const / SQRT_V

    # -- real coordinates -----------------------------------------------------
    def to_real(self):
        """Coordinates in the orthonormal real basis (1/sqrt V, sqrt2 Re Y, sqrt2 Im Y)."""
        s = math.sqrt(2.0)
        return np.concatenate([[self.const], s * self.holo.real, -s * self.holo.imag])

    @classmethod
    def from_real(cls, vec, max_degree):
        vec = np.asarray(vec, dtype=float)
        n = n_holo(max_degree)
        if vec.shape != (2 * n + 1,):
            raise InvalidInputError(f"expected a real vector of length {2 * n + 1}")
        s = math.sqrt(0.5)
        return cls(max_degree, vec[0], s * (vec[1:n + 1] - 1j * vec[n + 1:]))

    # -- serialization --------------------------------------------------------
    def to_records(self):
        """(kind, a, b, re, im) records for every index, constant first."""
        a, b, _, _ = basis_table(self.max_degree)
        rec = [[CONSTANT, 0, 0, self.const, 0.0]]
        for ai, bi, c in zip(a.tolist(), b.tolist(), self.holo):
            rec.append([HOLOMORPHIC, ai, bi, float(c.real), float(c.imag)])
            rec.append([ANTIHOLOMORPHIC, ai, bi, float(c.real), float(-c.imag)])
        return rec

    @classmethod
    def from_records(cls, records, max_degree=None):
        if max_degree is None:
            max_degree = max((int(r[1]) + int(r[2]) for r in records), default=0)
        out = cls(max_degree)
        mirror = {}
        for kind, a, b, re, im in records:
            idx = PlhBasisIndex(kind, int(a), int(b))
            val = complex(re, im)
            if kind == CONSTANT:
                if im != 0:
                    raise InvalidInputError("constant coefficient must be real")
                out.const = float(re)
            elif kind == HOLOMORPHIC:
                out.holo[holo_position(idx.a, idx.b)] = val
            else:
                mirror[(idx.a, idx.b)] = val
        for (a, b), val in mirror.items():
            if abs(np.conj(val) - out.holo[holo_position(a, b)]) > 1e-12 * (1 + abs(val)):
                raise InvalidInputError(f"reality violated at ({a}, {b})")
        return out

    def to_json(self):
        return json.dumps({"max_degree": self.max_degree, "coefficients": self.to_records()})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls.from_records(data["coefficients"], data["max_degree"])

    def __repr__(self):
        return f"PlhCoefficients(max_degree={self.max_degree}, const={self.const:.6g}, |holo|={np.linalg.norm(self.holo):.6g})"


# -- evaluation ---------------------------------------------------------------

def basis_eval(idx, p):
    """Value of the normalized basis function ``idx`` at the SpherePoint ``p``."""
    if idx.kind == CONSTANT:
        return complex(1.0 / SQRT_V)
    val = p.zeta1**idx.a * p.zeta2**idx.b * math.exp(-log_norm(idx.a, idx.b))
    return complex(val if idx.kind == HOLOMORPHIC else np.conj(val))


def holo_values(degree, z1, z2):
    """Y_h(zeta) for every holomorphic index, shape ``(n_holo, *z1.shape)``."""
    a, b, _, ln = basis_table(degree)
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    p1 = z1[None] ** np.arange(degree + 1).reshape((-1,) + (1,) * z1.ndim)
    p2 = z2[None] ** np.arange(degree + 1).reshape((-1,) + (1,) * z2.ndim)
    return p1[a] * p2[b] * np.exp(-ln).reshape((-1,) + (1,) * z1.ndim)


@lru_cache(maxsize=16)
def ring_factors(grid, degree):
    """cos(eta_k)^a sin(eta_k)^b / n_ab, shape ``(n_eta, n_holo)``."""
    a, b, _, ln = basis_table(degree)
    lx = np.log(grid.x)[:, None]
    ly = np.log1p(-grid.x)[:, None]
    out = np.exp(0.5 * a[None] * lx + 0.5 * b[None] * ly - ln[None])
    out.setflags(write=False)
    return out


def _check_grid(grid, degree):
    if grid.exactness_degree < 2 * degree:
        raise UnderResolutionError(
            f"grid exactness {grid.exactness_degree} is below 2*J = {2 * degree}")


def project_tau(samples, grid, degree):
    """Coefficients <samples, Y> of the pluriharmonic projection up to ``degree``."""
    _check_grid(grid, degree)
    f = np.broadcast_to(np.asarray(samples, dtype=float), grid.shape)
    fh = np.fft.fft2(f, axes=(1, 2))
    a, b, _, _ = basis_table(degree)
    P = ring_factors(grid, degree)
    holo = np.einsum("k,kh,kh->h", grid.ring_weights, P, fh[:, a, b])
    const = grid.integrate(f) / SQRT_V
    return PlhCoefficients(degree, const, holo)


def synthesize(coeffs, grid):
    """Node values of the real field described by ``coeffs``."""
    if grid.n_angle <= coeffs.max_degree:
        raise UnderResolutionError("n_angle must exceed the truncation degree")
    a, b, _, _ = basis_table(coeffs.max_degree)
    n = grid.n_angle
    S = np.zeros(grid.shape, dtype=complex)
    S[:, a, b] = ring_factors(grid, coeffs.max_degree) * coeffs.holo[None, :]
    field = np.fft.ifft2(S, axes=(1, 2))
    return coeffs.const / SQRT_V + 2.0 * n * n * field.real


def synthesize_at(coeffs, z1, z2):
    """Evaluate the field at arbitrary points given as complex coordinate arrays."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.broadcast_to(np.asarray(z2, dtype=complex), z1.shape).ravel()
    flat1 = z1.ravel()
    out = np.empty(flat1.shape)
    step = 4096
    for s in range(0, len(flat1), step):
        vals = holo_values(coeffs.max_degree, flat1[s:s + step], z2[s:s + step])
        out[s:s + step] = 2.0 * (coeffs.holo @ vals).real
    return (coeffs.const / SQRT_V + out).reshape(z1.shape)


def zonal_kernel(j, p, q):
    """Reproducing kernel of the degree-j pluriharmonic subspace."""
    if j < 1:
        raise InvalidInputError("zonal_kernel needs j >= 1")
    u = p.zeta1 * np.conj(q.zeta1) + p.zeta2 * np.conj(q.zeta2)
    return float(2.0 * ((j + 1) / VOLUME * u**j).real)


def random_coefficients(rng, degree, max_degree=None, decay=1.0):
    """Gaussian holomorphic coefficients of degree <= ``degree``, zero mean.

    The degree-j block is damped by ``(j+1)**-decay`` so low modes dominate.
    """
    max_degree = degree if max_degree is None else max_degree
    if max_degree < degree:
        raise InvalidInputError("max_degree must be >= degree")
    n = n_holo(degree)
    j = basis_table(degree)[2]
    c = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * (j + 1.0) ** -decay
    return PlhCoefficients(degree, 0.0, c).truncate(max_degree)


# -- densities -----------------------------------------------------------------

class DensityField:
    """A strictly positive conformal factor sampled on a quadrature grid.

    Parameters
    ----------
    values : array of grid shape
    grid : QuadratureGrid
    evaluator : callable, optional
        ``evaluator(z1, z2)`` returning F off the grid.  Needed only by the
        singular-quadrature and pointwise checks.
    """

    def __init__(self, values, grid, evaluator=None):
        values = np.array(np.broadcast_to(values, grid.shape), dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise InvalidInputError("density values must be finite and strictly positive")
        values.setflags(write=False)
        self.values = values
        self.grid = grid
        self.evaluator = evaluator
        self.volume = grid.integrate(values)
        self._potential = {}
        self._projection = {}
        # per-degree Gram matrices and spectra, filled by spectral
        self.cache = {}

    @classmethod
    def constant(cls, grid, value=1.0):
        return cls(np.full(grid.shape, float(value)), grid, lambda z1, z2: np.full(np.shape(z1), float(value)))

    @classmethod
    def from_function(cls, grid, func):
        """Sample ``func(z1, z2)`` on the grid and keep it as the evaluator."""
        return cls(grid.evaluate(func), grid, func)

    @classmethod
    def from_log_coefficients(cls, coeffs, grid):
        """F = exp(u) for a pluriharmonic u."""
        return cls(np.exp(synthesize(coeffs, grid)), grid,
                   lambda z1, z2: np.exp(synthesize_at(coeffs, z1, z2)))

    def scaled(self, c):
        c = float(c)
        ev = self.evaluator
        return DensityField(c * self.values, self.grid,
                            None if ev is None else (lambda z1, z2: c * ev(z1, z2)))

    def __call__(self, z1, z2):
        if self.evaluator is None:
            raise InvalidInputError("this density has no off-grid evaluator")
        return self.evaluator(z1, z2)

    @property
    def log_values(self):
        return np.log(self.values)

    def integrate(self, values):
        """Integral of ``values * F`` against the reference measure."""
        return self.grid.integrate(np.asarray(values) * self.values)

    def projection(self, degree):
        """tau F truncated at ``degree`` (cached)."""
        if degree not in self._projection:
            self._projection[degree] = project_tau(self.values, self.grid, degree)
        return self._projection[degree]

    def potential(self, degree):
        """A^{-1} tau F truncated at ``degree`` (cached)."""
        if degree not in self._potential:
            from .spectral import apply_A_inverse
            self._potential[degree] = apply_A_inverse(self.projection(degree))
        return self._potential[degree]

    def __repr__(self):
        return f"DensityField(grid={self.grid.n_eta}x{self.grid.n_angle}^2, V_F={self.volume:.12g})"
