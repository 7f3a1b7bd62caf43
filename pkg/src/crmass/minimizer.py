"""Volume-constrained minimization of J_eps by a damped fixed point in ln F.

The Euler-Lagrange equation

    m + (GAMMA3/4)(ln F + 1) - (2 c_eps / V) A^{-1-eps} tau F = lambda,
    c_eps = (1 - eps) lambda_1^eps,

is affine in ln F once the nonlocal term is frozen.  Solving it for ln F gives
the update target G; iterates move a damped step toward ln G, are renormalized
to volume V, and are accepted only when J_eps does not increase.
"""

from dataclasses import dataclass, field
import csv
import math
import warnings

import numpy as np

from .constants import DEFAULT_DEGREE, GAMMA3, LAMBDA1, SPHERE_MASS, VOLUME
from .errors import InvalidInputError, StagnationError
from .functionals import entropy, j_epsilon, j_functional
from .plh import DensityField, project_tau, synthesize
from .spectral import apply_A_fracpower

DEFAULT_SCHEDULE = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-8)
CLAMP = 1e-12
DESCENT_SLACK = 1e-12
MAX_HALVINGS = 30


@dataclass
class MinimizerConfig:
    eps_schedule: tuple = DEFAULT_SCHEDULE
    damping: float = 0.5
    max_iters: int = 400
    el_tolerance: float = 1e-8
    volume: float = VOLUME
    degree: int = DEFAULT_DEGREE

    def __post_init__(self):
        sched = tuple(float(e) for e in self.eps_schedule)
        if not sched or any(not 0.0 < e < 1.0 for e in sched):
            raise InvalidInputError("eps schedule entries must lie in (0, 1)")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise InvalidInputError("eps schedule must be strictly decreasing")
        if not 0.0 < self.damping <= 1.0:
            raise InvalidInputError("damping must lie in (0, 1]")
        if not self.el_tolerance > 0 or self.max_iters < 1:
            raise InvalidInputError("tolerance and max_iters must be positive")
        self.eps_schedule = sched


@dataclass
class MinimizerState:
    F: DensityField
    eps: float
    lagrange: float
    el_residual: float
    j_eps: float
    history: list = field(default_factory=list)   # (eps, iter, J_eps, residual, damping)
    converged: bool = False
    flagged: bool = False


def _c_eps(eps):
    return (1.0 - eps) * LAMBDA1**eps


def nonlocal_term(F, eps, degree):
    """A^{-1-eps} tau F as coefficients."""
    return apply_A_fracpower(1.0 + eps, F.projection(degree))


def el_residual(F, eps, degree, volume=VOLUME):
    """(lambda_eps, ||EL(F) - lambda_eps||_2) for the sub-critical EL equation.

    lambda_eps is the integrated multiplier:
    lambda V = int m F + (GAMMA3/4) int F ln F - (2 c_eps/V) int F A^{-1-eps} tau F + (GAMMA3/4) V.
    """
    grid = F.grid
    c = _c_eps(eps)
    B = nonlocal_term(F, eps, degree)
    quad = F.projection(degree).dot(B)
    lam = (SPHERE_MASS * F.volume + 0.25 * GAMMA3 * entropy(F)
           - 2.0 * c * quad / volume + 0.25 * GAMMA3 * volume) / volume
    lhs = (SPHERE_MASS + 0.25 * GAMMA3 * (F.log_values + 1.0)
           - (2.0 * c / volume) * synthesize(B, grid))
    return lam, math.sqrt(grid.integrate((lhs - lam) ** 2))


def _normalized(log_values, grid, volume):
    top = float(np.max(log_values))
    vals = np.exp(log_values - top)
    return DensityField(vals * (volume / grid.integrate(vals)), grid)


def prepare_start(F0, volume=VOLUME):
    """Clamp nodes below CLAMP (with a warning) and renormalize."""
    vals = np.asarray(F0.values)
    if np.any(vals < CLAMP):
        warnings.warn("start density has nodes below 1e-12; clamping", RuntimeWarning)
        vals = np.maximum(vals, CLAMP)
    return _normalized(np.log(vals), F0.grid, volume)


def initial_state(F0, eps, degree, volume=VOLUME):
    F = prepare_start(F0, volume)
    lam, res = el_residual(F, eps, degree, volume)
    return MinimizerState(F, eps, lam, res, j_epsilon(F, eps, degree))


def fixed_point_step(state, damping, degree, volume=VOLUME):
    """One damped, backtracked step toward the EL target; returns the new state.

    The target's constant is irrelevant since the result is renormalized, so
    ln G = (8 c_eps / (GAMMA3 V)) A^{-1-eps} tau F up to a constant.

    Raises
    ------
    StagnationError
        if no step size down to damping * 2^-30 decreases J_eps.
    """
    F, eps = state.F, state.eps
    grid = F.grid
    c = _c_eps(eps)
    log_target = (8.0 * c / (GAMMA3 * volume)) * synthesize(nonlocal_term(F, eps, degree), grid)
    log_f = F.log_values
    d = damping
    for _ in range(MAX_HALVINGS + 1):
        trial = _normalized((1.0 - d) * log_f + d * log_target, grid, volume)
        j_new = j_epsilon(trial, eps, degree)
        if j_new <= state.j_eps + DESCENT_SLACK:
            lam, res = el_residual(trial, eps, degree, volume)
            return MinimizerState(trial, eps, lam, res, j_new, state.history,
                                  state.converged, state.flagged), d
        d *= 0.5
    raise StagnationError(f"no descent step at eps={eps:g}", state)


def minimize(config, F0, callback=None):
    """Continuation over ``config.eps_schedule``, warm-starting each eps.

    On stagnation the best iterate so far is returned with ``flagged`` set.
    """
    deg, V = config.degree, config.volume
    state = initial_state(F0, config.eps_schedule[0], deg, V)
    history = state.history
    for eps in config.eps_schedule:
        lam, res = el_residual(state.F, eps, deg, V)
        state = MinimizerState(state.F, eps, lam, res, j_epsilon(state.F, eps, deg), history)
        history.append((eps, 0, state.j_eps, state.el_residual, 0.0))
        state.converged = state.el_residual <= config.el_tolerance
        it = 0
        while not state.converged and it < config.max_iters:
            it += 1
            try:
                state, used = fixed_point_step(state, config.damping, deg, V)
            except StagnationError as exc:
                best = exc.state
                best.flagged = True
                return best
            history.append((eps, it, state.j_eps, state.el_residual, used))
            state.converged = state.el_residual <= config.el_tolerance
            if callback is not None:
                callback(state)
    return state


def final_report(state, degree):
    """Summary numbers of a finished run: J, LHLS residual and mass spread."""
    from .functionals import lhls_residual
    from .mass import mass_transform
    rep = mass_transform(state.F, degree)
    return {
        "eps": state.eps,
        "J": j_functional(state.F, degree).total,
        "J_eps": state.j_eps,
        "lagrange": state.lagrange,
        "el_residual": state.el_residual,
        "lhls_residual": lhls_residual(state.F, degree),
        "mass_min": rep.min,
        "mass_max": rep.max,
        "mass_spread": rep.max - rep.min,
        "total_mass": rep.total,
        "iterations": len(state.history),
        "converged": state.converged,
        "flagged": state.flagged,
    }


def write_history_csv(path, state):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "iter", "J_eps", "residual", "damping"])
        for eps, it, j, r, d in state.history:
            w.writerow([repr(eps), it, repr(float(j)), repr(float(r)), repr(float(d))])


def write_final_density(csv_path, json_path, state, degree):
    """Node values as CSV and the pluriharmonic projection of ln F as JSON."""
    grid = state.F.grid
    E, X1, X2 = np.meshgrid(grid.eta, grid.xi, grid.xi, indexing="ij")
    rows = np.column_stack([E.ravel(), X1.ravel(), X2.ravel(), state.F.values.ravel()])
    np.savetxt(csv_path, rows, delimiter=",", header="eta,xi1,xi2,F", comments="", fmt="%.17g")
    with open(json_path, "w") as fh:
        fh.write(project_tau(state.F.log_values, grid, degree).to_json())
