"""Benchmark the compiled Riccati kernel against the pure-numpy fallback.

Runs the full backward Riccati solve for the built-in example at several
epsilon values through (a) the numba-compiled kernel, (b) the identical
uncompiled driver, and (c) the generic DP5(4) integrator that the rest of
the package uses. JIT compilation time is excluded by a warmup call.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from cheapgame import kernels
from cheapgame.exact import _D_poly, riccati_rhs
from cheapgame.example import pursuit_evasion_spec
from cheapgame.ode import IntegratorConfig, boundary_layer_cap, integrate_terminal


def kernel_args(spec, cfg):
    eps = spec.epsilon
    window = 10.0 * eps * max(math.log(1.0 / eps), 1.0)
    return (
        np.ascontiguousarray(spec.A_full().coeffs),
        np.ascontiguousarray(spec.C_full().coeffs),
        np.ascontiguousarray(spec.G.coeffs),
        np.ascontiguousarray(_D_poly(spec).coeffs),
        np.ascontiguousarray(spec.F_full()),
        spec.n,
        1.0 / eps,
        spec.t_f,
        cfg.rtol,
        cfg.atol,
        cfg.h_min,
        spec.t_f / (cfg.dense_points - 1),
        spec.t_f - window,
        0.5 * eps,
        cfg.max_steps,
    )


def timeit(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    cfg = IntegratorConfig()
    rows = []
    for eps in (0.2, 0.1, 0.05, 0.02):
        spec = pursuit_evasion_spec(eps)
        ka = kernel_args(spec, cfg)
        plain = kernels.riccati_kernel_numpy()

        try:
            from numba import njit

            compiled = njit(cache=True)(kernels._solve_K_backward)
            compiled(*ka)  # warmup: JIT compile / load from disk cache
            t_jit = timeit(lambda: compiled(*ka), args.repeat)
        except ImportError:
            t_jit = math.nan

        t_plain = timeit(lambda: plain(*ka), args.repeat)

        rhs = riccati_rhs(spec)
        F = spec.F_full()
        cap = boundary_layer_cap(spec.t_f, eps)
        gcfg = IntegratorConfig(symmetrize=True)
        t_generic = timeit(lambda: integrate_terminal(rhs, F, spec.t_f, gcfg, h_cap=cap), args.repeat)

        steps = plain(*ka)[1]
        rows.append((eps, steps, t_jit, t_plain, t_generic))

    print(f"{'eps':>6} {'steps':>6} {'numba kernel':>14} {'numpy kernel':>14} {'generic ode':>14} {'speedup':>8}")
    for eps, steps, t_jit, t_plain, t_generic in rows:
        speed = t_generic / t_jit if t_jit == t_jit else math.nan
        jit_s = f"{t_jit * 1e3:10.2f} ms" if t_jit == t_jit else "       n/a"
        print(f"{eps:6g} {steps:6d} {jit_s:>14} {t_plain * 1e3:11.2f} ms {t_generic * 1e3:11.2f} ms {speed:7.1f}x")


if __name__ == "__main__":
    main()
