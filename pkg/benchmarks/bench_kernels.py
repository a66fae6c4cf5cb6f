#!/usr/bin/env python3
"""Benchmark the polar operator kernels: numba @njit vs pure numpy.

Times raw forward/adjoint applications across grid sizes, then an
end-to-end group-action solver run under each kernel path (the operator
closures resolve ``kernels.polar_forward`` at call time, so the path can be
swapped in place).

Run:
    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from grouppgd import bench, kernels, solver, symmetry


def time_callable(fn, n_runs):
    fn()  # warmup (also triggers JIT compilation on the numba path)
    start = time.perf_counter()
    for _ in range(n_runs):
        fn()
    return (time.perf_counter() - start) / n_runs


def kernel_case(n_r, n_theta, n_angles, rays, n_off=3, seed=0):
    rng = np.random.default_rng(seed)
    x2 = rng.standard_normal((n_r, n_theta))
    cols = (rng.integers(0, n_theta, size=(n_angles, 1))
            + np.arange(n_off)) % n_theta
    cols = cols.astype(np.int64)
    weights = rng.standard_normal((n_angles, rays, n_r, n_off))
    weights_t = np.ascontiguousarray(np.moveaxis(weights, 1, 3))
    y = rng.standard_normal(n_angles * rays)
    return x2, cols, weights, weights_t, y


def bench_kernels():
    print(f"numba available: {kernels.NUMBA_ENABLED}")
    print()
    header = (f"{'grid':>12} {'angles':>6} {'rays':>5} "
              f"{'np fwd':>10} {'nb fwd':>10} {'np adj':>10} {'nb adj':>10} "
              f"{'speedup':>8}")
    print(header)
    print("-" * len(header))
    cases = [(16, 32, 8, 16), (32, 64, 16, 32), (64, 128, 32, 64),
             (128, 256, 64, 128)]
    for n_r, n_theta, n_angles, rays in cases:
        x2, cols, weights, weights_t, y = kernel_case(n_r, n_theta, n_angles, rays)
        n_runs = max(5, int(2e7 / (n_angles * rays * n_r * 3)))
        np_fwd = time_callable(
            lambda: kernels.polar_forward_numpy(x2, cols, weights), n_runs)
        np_adj = time_callable(
            lambda: kernels.polar_adjoint_numpy(y, cols, weights_t, n_r,
                                                n_theta), n_runs)
        if kernels.NUMBA_ENABLED:
            nb_fwd = time_callable(
                lambda: kernels.polar_forward_numba(x2, cols, weights), n_runs)
            nb_adj = time_callable(
                lambda: kernels.polar_adjoint_numba(y, cols, weights_t, n_r,
                                                    n_theta), n_runs)
            speedup = (np_fwd + np_adj) / (nb_fwd + nb_adj)
            nb_cols = f"{nb_fwd * 1e6:9.1f}u {nb_adj * 1e6:9.1f}u {speedup:7.2f}x"
        else:
            nb_cols = f"{'-':>10} {'-':>10} {'-':>8}"
        print(f"{n_r}x{n_theta:>9} {n_angles:>6} {rays:>5} "
              f"{np_fwd * 1e6:9.1f}u {np_adj * 1e6:9.1f}u {nb_cols}")
    print()


def bench_solver_run(iters=500):
    prob = bench.build_problem(n_r=32, n_theta=64, angle_fraction=0.25,
                               rays_per_angle=32, seed=0)
    subset = symmetry.symmetric_subset(prob.geometry.theta_shift(1), 2)
    config = solver.SolverConfig(max_iters=iters, seed=0, step_size=0.012)

    paths = [("numpy", kernels.polar_forward_numpy, kernels.polar_adjoint_numpy)]
    if kernels.NUMBA_ENABLED:
        paths.append(("numba", kernels.polar_forward_numba,
                      kernels.polar_adjoint_numba))
    saved = (kernels.polar_forward, kernels.polar_adjoint)
    results = {}
    try:
        for name, fwd, adj in paths:
            kernels.polar_forward = fwd
            kernels.polar_adjoint = adj
            solver.run(prob, config, subset=subset)  # warmup
            start = time.perf_counter()
            solver.run(prob, config, subset=subset)
            results[name] = time.perf_counter() - start
    finally:
        kernels.polar_forward, kernels.polar_adjoint = saved

    print(f"group solver, {iters} iterations on 32x64 grid:")
    for name, elapsed in results.items():
        print(f"  {name:6s} {elapsed:7.3f}s  ({elapsed / iters * 1e6:7.1f}us/iter)")
    if len(results) == 2:
        print(f"  end-to-end speedup: {results['numpy'] / results['numba']:.2f}x")


if __name__ == "__main__":
    bench_kernels()
    bench_solver_run()
