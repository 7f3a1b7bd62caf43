"""The operator A = tau P' tau on (S^3, theta_0) and its conformal Galerkin versions.

On the standard sphere A is diagonal in the pluriharmonic basis with
eigenvalue nu(j) = 8 j (j+1) on the degree-j block.  For a conformal factor F
the operator of theta_F = F^{1/2} theta_0 is tau_F (F^{-1} A); restricted to
the truncated basis it becomes the pencil D c = mu M_F c with D = diag(nu) and
M_F the F-weighted Gram matrix, both written in the real orthonormal
coordinates of :meth:`PlhCoefficients.to_real`.
"""

import math

import numpy as np
import scipy.linalg

from .constants import VOLUME, eigenvalue
from .errors import InvalidInputError, UnderResolutionError
from .plh import (PlhCoefficients, basis_table, holo_eigenvalues, project_tau,
                  ring_factors, SQRT_V)


def _degree_factors(u, func):
    j = np.arange(1, u.max_degree + 1)
    return func(eigenvalue(j))


def apply_A(u):
    """nu(j) on the degree-j block; constants are annihilated."""
    return u.scale_by_degree(_degree_factors(u, lambda nu: nu))


def apply_A_inverse(u):
    """A^{-1} tau with A^{-1} 1 = 0, so A A^{-1} u = u - mean(u)."""
    return u.scale_by_degree(_degree_factors(u, lambda nu: 1.0 / nu))


def apply_A_fracpower(s, u):
    """A^{-s}: nu(j)^{-s} on degree j >= 1, extended by 0 on the constants."""
    if not s > 0:
        raise InvalidInputError("fractional power needs s > 0")
    return u.scale_by_degree(_degree_factors(u, lambda nu: nu ** (-float(s))))


def real_eigenvalues(degree):
    """Diagonal of D in real coordinates: (0, nu for Re parts, nu for Im parts)."""
    nu = holo_eigenvalues(degree)
    return np.concatenate([[0.0], nu, nu])


def _angle_table(grid, F):
    """Phi_k[p, q] = (2 pi/n)^2 sum_nodes F exp(i (p xi1 + q xi2)) on every ring."""
    n = grid.n_angle
    return np.conj(np.fft.fft2(F.values, axes=(1, 2))) * (2.0 * math.pi / n) ** 2


def conformal_gram(F, degree):
    """Gram matrix of the real orthonormal basis in the F-weighted inner product.

    Raises
    ------
    UnderResolutionError
        if the quadrature is too coarse or the matrix is not positive definite.
    """
    key = ("gram", degree)
    if key in F.cache:
        return F.cache[key]
    grid = F.grid
    if grid.exactness_degree < 2 * degree:
        raise UnderResolutionError(
            f"grid exactness {grid.exactness_degree} is below 2*J = {2 * degree}")
    n = grid.n_angle
    a, b, _, _ = basis_table(degree)
    P = ring_factors(grid, degree)
    Phi = _angle_table(grid, F)
    half_w = 0.5 * grid.x_weights
    # Phi holds sum F e^{+i(p xi1 + q xi2)}, so Y_h conj(Y_h') picks p = a - a'
    da = (a[:, None] - a[None, :]) % n
    db = (b[:, None] - b[None, :]) % n
    sa = (a[:, None] + a[None, :]) % n
    sb = (b[:, None] + b[None, :]) % n
    m = len(a)
    H = np.zeros((m, m), dtype=complex)
    K = np.zeros((m, m), dtype=complex)
    for k in range(grid.n_eta):
        outer = half_w[k] * np.outer(P[k], P[k])
        H += outer * Phi[k][da, db]
        K += outer * Phi[k][sa, sb]
    # integral of Y_h F
    lin = np.einsum("k,kh,kh->h", half_w, P, Phi[:, a, b])

    M = np.empty((2 * m + 1, 2 * m + 1))
    M[0, 0] = F.volume / VOLUME
    s = math.sqrt(2.0) / SQRT_V
    M[0, 1:m + 1] = M[1:m + 1, 0] = s * lin.real
    M[0, m + 1:] = M[m + 1:, 0] = s * lin.imag
    M[1:m + 1, 1:m + 1] = (K + H).real
    M[m + 1:, m + 1:] = (H - K).real
    M[1:m + 1, m + 1:] = K.imag - H.imag
    M[m + 1:, 1:m + 1] = M[1:m + 1, m + 1:].T
    M = 0.5 * (M + M.T)
    try:
        chol = scipy.linalg.cho_factor(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise UnderResolutionError("F-weighted Gram matrix is not positive definite") from exc
    F.cache[key] = M
    F.cache[("chol", degree)] = chol
    return M


def conformal_spectrum(F, degree):
    """All nonzero generalized eigenvalues of D c = mu M_F c, ascending, with eigenvectors."""
    key = ("spectrum", degree)
    if key in F.cache:
        return F.cache[key]
    M = conformal_gram(F, degree)
    D = np.diag(real_eigenvalues(degree))
    mu, vec = scipy.linalg.eigh(D, M)
    # D has a one-dimensional kernel (the constants); drop exactly that eigenvalue
    zero = int(np.argmin(np.abs(mu)))
    keep = np.arange(len(mu)) != zero
    out = (mu[keep], vec[:, keep])
    F.cache[key] = out
    return out


def conformal_eigenvalues(F, count, degree):
    """The ``count`` smallest nonzero eigenvalues of A_{theta_F}."""
    mu, _ = conformal_spectrum(F, degree)
    if count > len(mu):
        raise UnderResolutionError(f"only {len(mu)} eigenvalues available at J = {degree}")
    return mu[:count].copy()


def sphere_eigenvalues(count, degree):
    """Ascending nonzero eigenvalues of A_{theta_0} in the same truncation."""
    mu = np.sort(real_eigenvalues(degree)[1:])
    if count > len(mu):
        raise UnderResolutionError(f"only {len(mu)} eigenvalues available at J = {degree}")
    return mu[:count]


def truncated_trace_difference(F, K, degree):
    """sum_{k<=K} 1/lambda_k(theta_F) - sum_{k<=K} 1/lambda_k(theta_0)."""
    lam_f = conformal_eigenvalues(F, K, degree)
    lam_0 = sphere_eigenvalues(K, degree)
    return float(np.sum(1.0 / lam_f) - np.sum(1.0 / lam_0))


# -- conformal inverse ---------------------------------------------------------

def _pair(F, g):
    """Integral of F g for a pluriharmonic g, by Parseval against tau F."""
    return F.projection(g.max_degree).dot(g)


def conformal_inverse_apply(F, f, degree):
    """A_{theta_F}^{-1} tau_F f through the closed formula on the base frame.

    ``f`` is a node-value array.  The result is mean-zero against F dv.
    """
    f = np.broadcast_to(np.asarray(f, dtype=float), F.grid.shape)
    Ff = F.values * f
    VF = F.volume
    total = F.grid.integrate(Ff)
    g = apply_A_inverse(project_tau(Ff, F.grid, degree))
    pot = F.potential(degree)
    a1 = _pair(F, g) / VF
    a2 = total * _pair(F, pot) / VF**2
    out = g - pot * (total / VF)
    out.const += (a2 - a1) * SQRT_V
    return out


def galerkin_inverse(F, load, degree):
    """Solve A_{theta_F} u = tau_F g - mean_F(g) in the truncated basis.

    ``load`` is the real weak-form vector b_i = integral of F g e_i.  The
    mean is removed from the load and u is pinned by integral of F u = 0 through
    a bordered system.
    """
    M = conformal_gram(F, degree)
    D = real_eigenvalues(degree)
    col = M[:, 0]
    mean = SQRT_V * load[0] / F.volume
    rhs = load - mean * SQRT_V * col
    n = len(D)
    S = np.zeros((n + 1, n + 1))
    S[:n, :n] = np.diag(D)
    S[:n, n] = col
    S[n, :n] = col
    sol = scipy.linalg.solve(S, np.concatenate([rhs, [0.0]]), assume_a="sym")
    return PlhCoefficients.from_real(sol[:n], degree)


def conformal_inverse_galerkin(F, f, degree):
    """The same object as :func:`conformal_inverse_apply` via a Galerkin solve."""
    f = np.broadcast_to(np.asarray(f, dtype=float), F.grid.shape)
    load = project_tau(F.values * f, F.grid, degree).to_real()
    return galerkin_inverse(F, load, degree)


# -- export --------------------------------------------------------------------

def write_spectrum_csv(path, eigenvalues):
    with open(path, "w") as fh:
        fh.write("k,lambda_k\n")
        for k, lam in enumerate(eigenvalues, start=1):
            fh.write(f"{k},{lam:.17g}\n")


def dump_matrix(path, M):
    """Dense float64 dump: a text header line ``rows cols`` then row-major data."""
    M = np.ascontiguousarray(M, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n".encode())
        fh.write(M.tobytes())


def load_matrix(path):
    with open(path, "rb") as fh:
        rows, cols = map(int, fh.readline().split())
        return np.frombuffer(fh.read(), dtype="<f8").reshape(rows, cols).copy()
