"""Benchmark the numeric kernels: numba fast path vs pure-numpy fallback.

The implementations are selected by the CYLMIMO_NO_NUMBA environment flag
at import time, so this script re-invokes itself in a subprocess per
implementation and prints a small comparison table.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _workloads():
    from cylmimo.forward import simulate_echo
    from cylmimo.geometry import ArrayLayout, FrequencyGrid, Scene
    from cylmimo.imaging import ImageGrid
    from cylmimo.rma import RmaConfig, reconstruct_rma

    rng = np.random.default_rng(7)
    r0 = 1.5
    layout = ArrayLayout.centered(r0, 3, 0.066, 15, 0.0066, 3, 0.1, 15, 0.01)
    freqs = FrequencyGrid(31e9, 39e9, 11)
    scene = Scene(rng.uniform(-0.05, 0.05, (20, 3)),
                  rng.standard_normal(20) + 1j * rng.standard_normal(20))
    grid = ImageGrid((0.0, 0.0, 0.0), (0.01, 0.01, 0.01), (16, 16, 16))
    echo = simulate_echo(scene, layout, freqs)
    points = grid.points()[::8]

    def bench_simulate():
        simulate_echo(scene, layout, freqs)

    def bench_backproject():
        from cylmimo.backprojection import backproject_at
        backproject_at(echo, points)

    def bench_rma():
        reconstruct_rma(echo, layout, RmaConfig(grid, oversample=1.5))

    return [("simulate_echo", bench_simulate),
            ("backproject", bench_backproject),
            ("reconstruct_rma", bench_rma)]


def run_child(repeat):
    results = {}
    for name, fn in _workloads():
        fn()  # warm-up (numba compilation, caches)
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        results[name] = min(times)
    print(json.dumps(results))


def run_parent(repeat):
    rows = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, CYLMIMO_NO_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--child",
             "--repeat", str(repeat)],
            env=env, capture_output=True, text=True, check=True)
        rows[label] = json.loads(out.stdout.strip().splitlines()[-1])
    names = rows["numba"].keys()
    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name in names:
        a, b = rows["numba"][name], rows["numpy"][name]
        print(f"{name:<18}{a:>12.4f}{b:>12.4f}{b / a:>10.2f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        run_child(args.repeat)
    else:
        run_parent(args.repeat)


if __name__ == "__main__":
    main()
