#!/usr/bin/env python3
"""Time the jitted reconstruction loops against their numpy twins.

The dispatch in pdepilot.kernels.accel reads PDEPILOT_DISABLE_NUMBA per call,
so one process can measure both paths back to back.  The jit is warmed before
timing; reported numbers are best-of-``--repeats`` wall times.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 4x4096 64x16384 --repeats 7
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from pdepilot.kernels import accel

OPS = ("weno3_left", "weno3_right", "minmod_slopes")


def parse_size(text: str) -> tuple[int, int]:
    rows, _, n = text.partition("x")
    return int(rows), int(n)


def best_time(fn, arg, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(arg)
        best = min(best, time.perf_counter() - t0)
    return best


def run(sizes: list[tuple[int, int]], repeats: int) -> list[dict]:
    rng = np.random.default_rng(0)
    rows_out = []
    for rows, n in sizes:
        f = rng.normal(size=(rows, n))
        for op in OPS:
            fn = getattr(accel, op)
            os.environ["PDEPILOT_DISABLE_NUMBA"] = "1"
            t_np = best_time(fn, f, repeats)
            entry = {"op": op, "rows": rows, "n": n, "numpy_s": t_np,
                     "numba_s": None, "speedup": None}
            if accel.HAVE_NUMBA:
                os.environ["PDEPILOT_DISABLE_NUMBA"] = "0"
                fn(f)  # warm the jit outside the timed region
                t_nb = best_time(fn, f, repeats)
                entry["numba_s"] = t_nb
                entry["speedup"] = t_np / t_nb if t_nb > 0 else float("inf")
            rows_out.append(entry)
    os.environ.pop("PDEPILOT_DISABLE_NUMBA", None)
    return rows_out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", nargs="*", default=["4x1024", "4x8192", "32x16384"],
                    help="array shapes as ROWSxN")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    sizes = [parse_size(s) for s in args.sizes]
    results = run(sizes, args.repeats)

    if not accel.HAVE_NUMBA:
        print("numba not installed: numpy path only\n")
    header = f"{'op':<14} {'shape':>12} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for r in results:
        shape = f"{r['rows']}x{r['n']}"
        t_np = f"{1e3 * r['numpy_s']:.3f}"
        t_nb = f"{1e3 * r['numba_s']:.3f}" if r["numba_s"] is not None else "--"
        speed = f"{r['speedup']:.2f}x" if r["speedup"] is not None else "--"
        print(f"{r['op']:<14} {shape:>12} {t_np:>12} {t_nb:>12} {speed:>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
