"""Timing comparison of the compiled and pure-Python orbit kernels.

Runs the same batch of orbits through both kernels, checks the outputs
are bit-identical, and prints per-orbit timings plus the speedup.

    python3 benchmarks/bench_orbit.py [--degree D] [--orbits N]
"""

import argparse
import math
import time

from newton_atlas import available_backends
from newton_atlas._kernels import fallback
from newton_atlas.ensemble import sample_roots
from newton_atlas.grid import build_grid, r_central_bound
from newton_atlas.orbit import far_k_threshold, near_k_threshold


def batch(kern, starts, roots, d, eps, mode):
    div = 4.0 * r_central_bound(d)
    fk = far_k_threshold(d)
    nk = near_k_threshold(d, 0.25)
    rre = [r.real for r in roots]
    rim = [r.imag for r in roots]
    out = []
    t0 = time.perf_counter()
    for z in starts:
        out.append(
            kern.run_orbit_kernel(
                z.real, z.imag, rre, rim, eps, 10_000_000, div, fk, nk, mode, 0
            )
        )
    return time.perf_counter() - t0, out


def eq(a, b):
    if isinstance(a, float) and isinstance(b, float):
        return a == b or (math.isnan(a) and math.isnan(b))
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(eq(x, y) for x, y in zip(a, b))
    return a == b


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--degree", type=int, default=50)
    ap.add_argument("--orbits", type=int, default=200)
    ap.add_argument("--epsilon", type=float, default=1e-10)
    ap.add_argument("--mode", type=int, default=1, choices=(0, 1, 2))
    args = ap.parse_args()

    if "compiled" not in available_backends():
        raise SystemExit("compiled kernel not built; nothing to compare")
    from newton_atlas._kernels import _core

    d = args.degree
    roots = sample_roots(d, 12345)
    grid = build_grid(d, phase_seed=1)
    starts = list(grid.points)[: args.orbits]

    # warm-up pass, then timed passes
    batch(_core, starts[:10], roots, d, args.epsilon, args.mode)
    tc, rc = batch(_core, starts, roots, d, args.epsilon, args.mode)
    tf, rf = batch(fallback, starts, roots, d, args.epsilon, args.mode)

    mismatches = sum(1 for a, b in zip(rc, rf) if not eq(a, b))
    iters = sum(row[1] for row in rc)

    print(f"degree {d}, {len(starts)} orbits, eps {args.epsilon:g}, "
          f"record mode {args.mode}, {iters} total iterations")
    print(f"  compiled: {tc:8.4f} s  ({1e6 * tc / max(iters, 1):7.3f} us/iter)")
    print(f"  fallback: {tf:8.4f} s  ({1e6 * tf / max(iters, 1):7.3f} us/iter)")
    print(f"  speedup:  {tf / tc:8.1f}x")
    print(f"  bit-identical results: {mismatches == 0} "
          f"({len(rc) - mismatches}/{len(rc)} orbits)")
    if mismatches:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
