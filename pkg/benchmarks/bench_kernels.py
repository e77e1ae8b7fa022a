#!/usr/bin/env python3
"""Benchmark the compiled kernel lane against the pure-NumPy fallback.

Times the three hot kernels on solver-sized operands and a full stochastic
solver epoch on the synthetic fused-lasso instance. The solver comparison
re-runs this script in a subprocess with SPDFP_FORCE_NUMPY=1 so each lane
is timed under its own import-time selection.

Usage: python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))


def time_call(fn, min_seconds=0.2):
    fn()  # warm up
    n, t0 = 0, time.perf_counter()
    while time.perf_counter() - t0 < min_seconds:
        fn()
        n += 1
    return (time.perf_counter() - t0) / n


def bench_kernels():
    import spdfp._kernels._numpy as lane_np
    lanes = [("numpy", lane_np)]
    try:
        import spdfp._kernels._core as lane_cy
        lanes.insert(0, ("cython", lane_cy))
    except ImportError:
        print("compiled lane not built; benchmarking the numpy lane only")
    from spdfp.sparse import build_difference_matrix, SparseMatrix

    rng = np.random.default_rng(0)
    cases = []
    for d in (50, 200, 2000):
        cases.append((f"diff {d - 1}x{d}", build_difference_matrix(d)))
    dense = rng.standard_normal((200, 100))
    cases.append(("dense 200x100", SparseMatrix.from_dense(dense)))

    print(f"{'kernel':<34}" + "".join(f"{name:>12}" for name, _ in lanes) + f"{'speedup':>10}")
    for label, M in cases:
        x = rng.standard_normal(M.n_cols)
        y = rng.standard_normal(M.n_rows)
        out_m = np.empty(M.n_rows)
        out_r = np.empty(M.n_cols)
        rows = {}
        for name, mod in lanes:
            t_mv = time_call(lambda: mod.csr_matvec_range(
                M.indptr, M.indices, M.data, x, out_m, 0, M.n_rows))
            t_rmv = time_call(lambda: mod.csr_rmatvec_range(
                M.indptr, M.indices, M.data, y, out_r, 0, M.n_rows))
            rows[name] = (t_mv, t_rmv)
        for i, op in enumerate(("matvec", "rmatvec")):
            times = [rows[name][i] for name, _ in lanes]
            speed = f"{times[-1] / times[0]:.1f}x" if len(times) == 2 else "-"
            print(f"{op + ' ' + label:<34}"
                  + "".join(f"{t * 1e6:>10.2f}us" for t in times) + f"{speed:>10}")

    v = rng.standard_normal(4096)
    out = np.empty(4096)
    times = []
    for name, mod in lanes:
        times.append(time_call(lambda: mod.soft_threshold(v, 0.3, out)))
    speed = f"{times[-1] / times[0]:.1f}x" if len(times) == 2 else "-"
    print(f"{'soft_threshold 4096':<34}"
          + "".join(f"{t * 1e6:>10.2f}us" for t in times) + f"{speed:>10}")


def bench_solver_epochs():
    from spdfp.harness import synth_fused_lasso, prox_for, default_lambda
    from spdfp.solvers import SolverConfig, StepSchedule, run_solver
    from spdfp import backend

    spec = synth_fused_lasso(1000, 50, 0.05, 0.01, seed=7)
    cfg = SolverConfig(schedule=StepSchedule(c=1.0, alpha=0.7),
                       lam=default_lambda(spec), p=10, seed=1, max_epochs=20)
    t = time_call(lambda: run_solver("spdfp2", spec, prox_for(spec), cfg), min_seconds=1.0)
    print(f"solver 20 epochs (p=10, 1000x50) [{backend()}]: {t * 1e3:.1f} ms")


def main():
    if os.environ.get("SPDFP_FORCE_NUMPY") == "1":
        bench_solver_epochs()
        return
    bench_kernels()
    print()
    bench_solver_epochs()
    sys.stdout.flush()
    env = dict(os.environ, SPDFP_FORCE_NUMPY="1")
    subprocess.run([sys.executable, os.path.abspath(__file__)], env=env, check=True)


if __name__ == "__main__":
    main()
