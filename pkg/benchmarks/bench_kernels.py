"""Compare the compiled and numpy kernel backends on the pairwise sums.

    python3 benchmarks/bench_kernels.py [--sizes 2000,4000,8000] [--repeat 3] [--json out.json]

Prints one row per (kernel, size) with the best-of-``repeat`` wall time of each
backend, the speed-up and the relative difference of the results.
"""

import argparse
import json
import sys
import time

import numpy as np

from crmass import kernels
from crmass.functionals import rng_for


def _best_time(func, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - t0)
    return best, out


def pair_sum_case(n, seed=0):
    r = rng_for(seed, n)
    x, y, t = r.standard_normal((3, n))
    m = r.uniform(0.1, 1.0, n)
    diag = np.zeros(n)
    return lambda impl: kernels.heis_log_pair_sum(x, y, t, m, diag, impl=impl)


def ball_mass_case(n, seed=0):
    r = rng_for(seed, n)
    g = r.standard_normal((n, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    z1, z2 = g[:, 0] + 1j * g[:, 1], g[:, 2] + 1j * g[:, 3]
    w = r.uniform(0, 1, n)
    c1, c2 = z1[: n // 4], z2[: n // 4]
    return lambda impl: np.sum(kernels.sphere_ball_masses(c1, c2, z1, z2, w, 0.125, impl=impl))


CASES = {"heis_log_pair_sum": pair_sum_case, "sphere_ball_masses": ball_mass_case}


def run(sizes, repeat):
    if kernels.BACKEND != "compiled":
        raise SystemExit("compiled extension not available; rebuild with "
                         "`pip install -e . --no-build-isolation`")
    compiled, python = kernels.backend("compiled"), kernels.backend("python")
    rows = []
    for name, make in CASES.items():
        for n in sizes:
            case = make(n)
            tc, vc = _best_time(lambda: case(compiled), repeat)
            tp, vp = _best_time(lambda: case(python), repeat)
            rows.append({"kernel": name, "n": n, "compiled_s": tc, "python_s": tp,
                         "speedup": tp / tc, "rel_diff": abs(vc - vp) / max(abs(vp), 1e-300)})
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="2000,4000,8000")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--json", help="also write the rows to this file")
    args = p.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = run(sizes, args.repeat)
    print(f"{'kernel':<20}{'n':>8}{'compiled [s]':>14}{'python [s]':>12}{'speed-up':>10}{'rel diff':>11}")
    for r in rows:
        print(f"{r['kernel']:<20}{r['n']:>8}{r['compiled_s']:>14.4f}{r['python_s']:>12.4f}"
              f"{r['speedup']:>10.1f}{r['rel_diff']:>11.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
