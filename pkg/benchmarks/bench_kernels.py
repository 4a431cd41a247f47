"""Time each kernel under the compiled and pure-Python backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--kernel NAME ...] [--json out.json]

Inputs are fixed-seed workloads close to what the experiments feed the
kernels.  The best of ``--repeat`` runs is reported, with the speedup of the
compiled backend and whether both backends returned the same result.
"""

import argparse
import json
import sys
import time

import numpy as np

from sweepout import kernels
from sweepout.chains import CubicalGrid
from sweepout.pyramid import ball_polytope


def _workloads(rng):
    grid_offset = rng.uniform(0, 0.1, 2)
    body = ball_polytope(3, 64)
    masks = [int(v) for v in rng.integers(1, 1 << 40, 18)]
    roots = rng.uniform(-1, 1, (400, 5))
    C = np.array([np.polynomial.polynomial.polyfromroots(r) for r in roots])
    A_lp = np.vstack([rng.standard_normal((60, 4)), np.eye(4), -np.eye(4)])
    b_lp = np.concatenate([rng.uniform(0.5, 1.0, 60), np.ones(8)])
    cands = rng.uniform(-0.5, 0.5, (60_000, 2))
    cands = cands[(cands ** 2).sum(axis=1) < 0.25]
    radii = np.full(2000, 0.25 * 2000 ** -0.5)
    return {
        "squeeze_points": (rng.uniform(-1, 1, (20_000, 2)), 1, 0.1, 0.05, grid_offset),
        "push_segments": (rng.uniform(-1, 1, (300, 2)), rng.uniform(-1, 1, (300, 2)), 1, 0.1, 0.05,
                          grid_offset),
        "flat_norm_search": (masks, int(rng.integers(0, 1 << 40)), 2, CubicalGrid(2, 3).N),
        "sturm_counts": (C, np.full(400, -1.0), np.full(400, 1.0)),
        "clip_volume": (body.boundary, np.array([0.6, 0.0, 0.8]), 0.1),
        "simplex_max": (rng.standard_normal(4), A_lp, b_lp),
        "greedy_pack": (cands, radii, 2 * radii[0]),
        "segment_line_counts": (rng.uniform(-1, 1, (500, 2)), rng.uniform(-1, 1, (500, 2)),
                                rng.uniform(0, np.pi, 2000), rng.uniform(-1, 1, 2000)),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return a.shape == b.shape and bool(np.allclose(a, b, rtol=1e-10, atol=1e-12, equal_nan=True))


def time_kernel(name, args, backend, repeat):
    fn = getattr(kernels, name)
    best, out = float("inf"), None
    with kernels.backend_scope(backend):
        for _ in range(repeat):
            t0 = time.perf_counter()
            out = fn(*args)
            best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--kernel", action="append", choices=kernels.KERNEL_NAMES)
    ap.add_argument("--json", default=None, help="also write the timings as JSON")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the Python kernels only", file=sys.stderr)
    work = _workloads(np.random.default_rng(2024))
    names = args.kernel or list(kernels.KERNEL_NAMES)
    rows = []
    print(f"{'kernel':<22}{'python [ms]':>13}{'compiled [ms]':>15}{'speedup':>10}  same")
    for name in names:
        t_py, out_py = time_kernel(name, work[name], "python", args.repeat)
        row = {"kernel": name, "python_s": t_py}
        if "compiled" in backends:
            t_c, out_c = time_kernel(name, work[name], "compiled", args.repeat)
            row.update(compiled_s=t_c, speedup=t_py / t_c, same=_same(out_py, out_c))
            print(f"{name:<22}{1e3 * t_py:>13.3f}{1e3 * t_c:>15.3f}{t_py / t_c:>10.1f}  {row['same']}")
        else:
            print(f"{name:<22}{1e3 * t_py:>13.3f}{'-':>15}{'-':>10}  -")
        rows.append(row)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"backends": list(backends), "repeat": args.repeat, "rows": rows}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
