"""Command-line entry point: ``crmass <command> [options]``.

Every command prints a JSON summary (sorted keys, inputs and tolerances
echoed) on stdout.  With ``--out DIR`` the summary and any tabular artifacts
are also written there.

Exit codes: 0 pass, 1 usage error, 2 invariant violation, 3 configuration
error, 4 numerical under-resolution.
"""

import argparse
from dataclasses import dataclass, asdict
import json
import math
import os
import sys

import numpy as np

from . import constants as C
from .errors import InvalidInputError, StagnationError, UnderResolutionError
from .plh import DensityField
from .sphere import AutSphereParams, build_grid, grid_for_degree

EXIT_PASS = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2
EXIT_CONFIG = 3
EXIT_UNDER_RESOLUTION = 4

COMMANDS = ("constants", "mass", "lhls-sweep", "eig", "minimize", "heis-check", "verify")

# default gating tolerance per command
DEFAULT_TOL = {
    "constants": 1e-3,
    "mass": 1e-10,
    "lhls-sweep": 1e-9,
    "eig": 1e-9,
    "minimize": 1e-3,
    "heis-check": 1e-2,
    "verify": 1e-8,
}
MINIMIZER_GRID = (24, 72)


class ConfigError(InvalidInputError):
    pass


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    degree: int = C.DEFAULT_DEGREE
    grid: tuple = None
    seed: int = 0
    eps_schedule: tuple = None
    tol: float = None
    out: str = None
    n: int = 100
    start: str = "random"
    field_spec: str = "one"
    ks: tuple = (4, 50, 200, 800)

    def __post_init__(self):
        if self.degree < 1:
            raise ConfigError("degree must be positive")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.tol is None:
            self.tol = DEFAULT_TOL[self.command]
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.grid is not None and min(self.grid) < 1:
            raise ConfigError("grid sizes must be positive")
        if self.start not in ("random", "one"):
            raise ConfigError("start must be 'random' or 'one'")

    def make_grid(self, default=None):
        if self.grid is not None:
            return build_grid(*self.grid)
        if default is not None:
            return build_grid(*default)
        return grid_for_degree(self.degree)

    def inputs(self):
        return asdict(self)


# -- parsing -----------------------------------------------------------------

def parse_grid(text):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise ConfigError(f"grid must look like 40x128, got {text!r}") from None


def parse_floats(text):
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def parse_ints(text):
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def read_config_file(path):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[key] = val
    return out


_CONVERTERS = {
    "degree": int,
    "grid": parse_grid,
    "seed": int,
    "eps_schedule": parse_floats,
    "tol": float,
    "out": str,
    "n": int,
    "start": str,
    "ks": parse_ints,
}


def _convert(key, value):
    if not isinstance(value, str):
        return value
    try:
        return _CONVERTERS[key](value)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="crmass", description="Robin mass and LHLS computations on S^3 and H.")
    p.add_argument("--config", help="flat key = value file; flags override it")
    sub = p.add_subparsers(dest="command", metavar="command")

    def common(sp):
        sp.add_argument("--degree", help="basis truncation degree J")
        sp.add_argument("--grid", help="quadrature grid N_ETAxN_ANGLE")
        sp.add_argument("--seed", help="random seed")
        sp.add_argument("--eps-schedule", dest="eps_schedule", help="comma-separated eps values")
        sp.add_argument("--tol", help="gating tolerance")
        sp.add_argument("--out", help="directory for JSON/CSV artifacts")
        return sp

    common(sub.add_parser("constants", help="closed-form constants and eigenvalue table"))
    sp = common(sub.add_parser("mass", help="Robin mass report of a conformal factor"))
    sp.add_argument("field_spec", metavar="F", help="one | jk:w1,w2 | rand:seed[:degree[:amp]]")
    sp = common(sub.add_parser("lhls-sweep", help="LHLS residuals on a random ensemble"))
    sp.add_argument("--n", help="ensemble size")
    sp = common(sub.add_parser("eig", help="conformal spectrum and truncated trace difference"))
    sp.add_argument("field_spec", metavar="F")
    sp.add_argument("--ks", help="comma-separated K values")
    sp = common(sub.add_parser("minimize", help="sub-critical continuation to the minimizer"))
    sp.add_argument("--start", help="random | one")
    common(sub.add_parser("heis-check", help="Heisenberg sharp LHLS deficits"))
    common(sub.add_parser("verify", help="compact invariant suite"))
    return p


def config_from_args(argv):
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise UsageError(f"a command is required: {', '.join(COMMANDS)}")
    values = read_config_file(ns.config) if ns.config else {}
    for key in _CONVERTERS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    kwargs = {k: _convert(k, v) for k, v in values.items()}
    if hasattr(ns, "field_spec"):
        kwargs["field_spec"] = ns.field_spec
    return RunConfig(command=ns.command, **kwargs)


def parse_field_spec(spec, grid, degree):
    """Volume-V density from ``one``, ``jk:w1,w2`` or ``rand:seed[:degree[:amp]]``."""
    from .functionals import extremal_density, random_density
    kind, _, rest = spec.partition(":")
    try:
        if kind == "one":
            return DensityField.constant(grid)
        if kind == "jk":
            w1, w2 = (complex(s.strip()) for s in rest.split(","))
            return extremal_density(AutSphereParams(1.0, (w1, w2)), grid)
        if kind == "rand":
            parts = rest.split(":")
            seed = int(parts[0])
            deg = int(parts[1]) if len(parts) > 1 and parts[1] else 6
            amp = float(parts[2]) if len(parts) > 2 else 2.0
            if deg > degree:
                raise ConfigError(f"density degree {deg} exceeds basis degree {degree}")
            return random_density(grid, seed, 0, deg, amp)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise ConfigError(f"malformed field spec {spec!r}") from None
    raise ConfigError(f"unknown field spec kind {kind!r}")


# -- commands ------------------------------------------------------------------

def _check(name, value, bound, ok):
    return {"name": name, "value": float(value), "bound": float(bound), "pass": bool(ok)}


def cmd_constants(cfg):
    from .mass import robin_mass_extrapolated
    summary = C.summary()
    summary["nu"] = {str(j): C.eigenvalue(j) for j in range(1, 9)}
    extrap = robin_mass_extrapolated()
    checks = [_check("mass_extrapolation", abs(extrap - C.SPHERE_MASS), cfg.tol,
                     abs(extrap - C.SPHERE_MASS) <= cfg.tol)]
    summary["mass_extrapolated"] = extrap
    return summary, checks, {}


def cmd_mass(cfg):
    from .functionals import lhls_residual
    from .mass import mass_transform
    grid = cfg.make_grid()
    F = parse_field_spec(cfg.field_spec, grid, cfg.degree)
    rep = mass_transform(F, cfg.degree)
    lhs = rep.total - C.SPHERE_TOTAL_MASS
    rhs = lhls_residual(F, cfg.degree)
    out = {"total_mass": rep.total, "min": rep.min, "max": rep.max, "method": rep.method,
           "mass_difference": lhs, "lhls_residual": rhs}
    checks = [_check("mass_identity", abs(lhs - rhs), cfg.tol, abs(lhs - rhs) <= cfg.tol)]
    return out, checks, {"mass_field.csv": lambda p: rep.write_field_csv(p, grid)}


def cmd_lhls_sweep(cfg):
    from .functionals import lhls_sweep, sweep_summary, write_sweep_csv
    grid = cfg.make_grid()
    rows = lhls_sweep(grid, cfg.degree, cfg.n, cfg.seed)
    out = sweep_summary(rows)
    checks = [_check("min_residual", out["min_residual"], -cfg.tol,
                     out["min_residual"] >= -cfg.tol)]
    return out, checks, {"sweep.csv": lambda p: write_sweep_csv(p, rows)}


def cmd_eig(cfg):
    from .functionals import lhls_residual
    from .spectral import (conformal_eigenvalues, sphere_eigenvalues, write_spectrum_csv)
    grid = cfg.make_grid()
    F = parse_field_spec(cfg.field_spec, grid, cfg.degree)
    kmax = max(cfg.ks)
    lam_f = conformal_eigenvalues(F, kmax, cfg.degree)
    lam_0 = sphere_eigenvalues(kmax, cfg.degree)
    traces = {str(k): float(np.sum(1.0 / lam_f[:k]) - np.sum(1.0 / lam_0[:k])) for k in cfg.ks}
    s4 = float(np.sum(1.0 / lam_f[:4]))
    out = {"lambda": lam_f[:8].tolist(), "inverse_sum_4": s4, "trace_difference": traces,
           "lhls_residual": lhls_residual(F, cfg.degree)}
    checks = [_check("inverse_sum_4", s4, 0.25 - cfg.tol, s4 >= 0.25 - cfg.tol)]
    return out, checks, {"spectrum.csv": lambda p: write_spectrum_csv(p, lam_f)}


def cmd_minimize(cfg):
    from .functionals import random_density
    from .minimizer import (DEFAULT_SCHEDULE, MinimizerConfig, final_report, minimize,
                            write_final_density, write_history_csv)
    grid = cfg.make_grid(MINIMIZER_GRID)
    if cfg.start == "one":
        F0 = DensityField.constant(grid)
    else:
        F0 = random_density(grid, cfg.seed, 0)
    sched = cfg.eps_schedule or DEFAULT_SCHEDULE
    mc = MinimizerConfig(eps_schedule=sched, degree=cfg.degree)
    state = minimize(mc, F0)
    rep = final_report(state, cfg.degree)
    target = C.SPHERE_TOTAL_MASS
    checks = [
        _check("J_error", abs(rep["J"] - target), cfg.tol, abs(rep["J"] - target) <= cfg.tol),
        _check("mass_spread", rep["mass_spread"], cfg.tol, rep["mass_spread"] <= cfg.tol),
        _check("not_flagged", float(state.flagged), 0.0, not state.flagged),
    ]
    rep["J_target"] = target
    files = {
        "history.csv": lambda p: write_history_csv(p, state),
        "final_density.csv": lambda p: write_final_density(
            p, os.path.join(os.path.dirname(p), "final_log_coefficients.json"), state, cfg.degree),
    }
    return rep, checks, files


def cmd_heis_check(cfg):
    from .heisenberg import refinement_study
    rows = refinement_study()
    deficits = [r["deficit"] for r in rows]
    decreasing = all(b < a for a, b in zip(deficits, deficits[1:]))
    desk = deficits[len(deficits) // 2]
    checks = [
        _check("desk_deficit", desk, cfg.tol, abs(desk) <= cfg.tol),
        _check("decreasing", float(decreasing), 1.0, decreasing),
    ]
    out = {"levels": rows, "J_target": math.log(2.0) / 8.0}

    def write(path):
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for r in rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return out, checks, {"refinement.csv": write}


def cmd_verify(cfg):
    """Fast invariants on a degree-limited grid; each check gates at ``tol``."""
    from .functionals import (extremal_density, lhls_residual, random_aut_params,
                              random_density, rng_for)
    from .heisenberg import HeisGrid, cayley_density_grid, j_heisenberg
    from .mass import green_sphere, mass_transform, spectral_green
    from .sphere import SpherePoint, random_points
    from .spectral import conformal_eigenvalues, conformal_inverse_apply, conformal_inverse_galerkin
    deg = min(cfg.degree, 12)
    grid = grid_for_degree(deg)
    rng = rng_for(cfg.seed, 0)
    tol = cfg.tol
    checks = []

    z1, z2 = random_points(rng, 2)
    p, q = SpherePoint(z1[0], z2[0]), SpherePoint(z1[1], z2[1])
    checks.append(_check("green_symmetry", abs(green_sphere(p, q) - green_sphere(q, p)), tol,
                         abs(green_sphere(p, q) - green_sphere(q, p)) <= tol))
    g_err = abs(spectral_green(p, q, 400, tail_terms=0) - green_sphere(p, q))
    checks.append(_check("spectral_green", g_err, 1e-3, g_err <= 1e-3))

    F = random_density(grid, cfg.seed, 1, 4, 1.0)
    gap = abs(mass_transform(F, deg).total - C.SPHERE_TOTAL_MASS - lhls_residual(F, deg))
    checks.append(_check("mass_identity", gap, tol, gap <= tol))
    res = lhls_residual(F, deg)
    checks.append(_check("lhls_residual", res, -tol, res >= -tol))

    E = extremal_density(random_aut_params(rng, 0.4), grid)
    s4 = float(np.sum(1.0 / conformal_eigenvalues(E, 4, deg)))
    checks.append(_check("inverse_sum_4", s4, 0.25 - tol, s4 >= 0.25 - tol))

    f = np.cos(grid.evaluate(lambda a, b: np.real(a * np.conj(b))))
    diff = (conformal_inverse_apply(F, f, deg) - conformal_inverse_galerkin(F, f, deg)).norm()
    checks.append(_check("inverse_formula", diff, tol, diff <= tol))

    hg = HeisGrid.uniform(9, 9, 0.5)
    cg = cayley_density_grid(hg)
    dj = abs(j_heisenberg(cg) - j_heisenberg(cg.dilated(1.7)))
    checks.append(_check("heis_scaling", dj, tol, dj <= tol))
    return {"verify_degree": deg}, checks, {}


HANDLERS = {
    "constants": cmd_constants,
    "mass": cmd_mass,
    "lhls-sweep": cmd_lhls_sweep,
    "eig": cmd_eig,
    "minimize": cmd_minimize,
    "heis-check": cmd_heis_check,
    "verify": cmd_verify,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def run(cfg, stream=None):
    """Execute ``cfg``; returns (exit status, summary dict)."""
    stream = sys.stdout if stream is None else stream
    try:
        result, checks, files = HANDLERS[cfg.command](cfg)
        status = EXIT_PASS if all(c["pass"] for c in checks) else EXIT_INVARIANT
        error = None
    except UnderResolutionError as exc:
        result, checks, files, status, error = {}, [], {}, EXIT_UNDER_RESOLUTION, str(exc)
    except StagnationError as exc:
        result, checks, files, status, error = {}, [], {}, EXIT_INVARIANT, str(exc)
    except InvalidInputError as exc:
        result, checks, files, status, error = {}, [], {}, EXIT_CONFIG, str(exc)
    summary = _jsonable({"command": cfg.command, "inputs": cfg.inputs(), "seed": cfg.seed,
                         "tolerances": {c["name"]: c["bound"] for c in checks},
                         "checks": checks, "result": result, "status": status, "error": error})
    text = json.dumps(summary, sort_keys=True, indent=2)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        for name, writer in files.items():
            writer(os.path.join(cfg.out, name))
        with open(os.path.join(cfg.out, f"{cfg.command}.json"), "w") as fh:
            fh.write(text + "\n")
    stream.write(text + "\n")
    return status, summary


def main(argv=None):
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        sys.stderr.write(f"crmass: {exc}\n")
        return EXIT_USAGE
    except InvalidInputError as exc:
        sys.stderr.write(f"crmass: configuration error: {exc}\n")
        return EXIT_CONFIG
    return run(cfg)[0]


if __name__ == "__main__":
    sys.exit(main())
