"""JIT-compiled fast path for the full game Riccati backward solve.

The exact solve is the hot loop of the package: it is stiff (O(1/eps)
boundary layer at t_f forces steps of order eps everywhere) and is run for
every epsilon in a sweep. The kernel below is the Dormand-Prince 5(4)
driver specialized to

    dK/dt = -(K A(t) + A(t)^T K) + K [eps^-2 B B^T - S_v(t)] K - D(t)

with polynomial coefficient data packed as plain arrays, so numba can
compile the whole loop. Everything else in the package integrates through
the generic pure-numpy driver in ode.py, which is also the fallback here.

Backend selection: set CHEAPGAME_BACKEND=numpy to force the fallback, or
CHEAPGAME_BACKEND=numba to require the JIT (raises if numba is missing).
Default is numba when importable. benchmarks/bench_backends.py compares
the two paths.
"""

from __future__ import annotations

import os

import numpy as np

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_MAX_STEPS = 2

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 6))
_DP_A[1, :1] = [1 / 5]
_DP_A[2, :2] = [3 / 40, 9 / 40]
_DP_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_DP_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_DP_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_DP_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

_OVERFLOW_GUARD = 1e12
_BLOWUP_REFINE = 1e-4


def _solve_K_backward(
    acoef,
    ccoef,
    gcoef,
    dcoef,
    F,
    n,
    inv_eps,
    t_f,
    rtol,
    atol,
    h_min,
    h_dense,
    layer_start,
    layer_cap,
    max_steps,
):
    """Backward DP5(4) loop from K(t_f) = F to t = 0, descending-time storage."""
    N = F.shape[0]

    # inner closures so the whole body compiles as one unit under numba
    def polyval(coef, t):
        out = coef[-1].copy()
        for k in range(coef.shape[0] - 2, -1, -1):
            out = out * t + coef[k]
        return out

    def rhs(t, K):
        A = polyval(acoef, t)
        C = polyval(ccoef, t)
        G = polyval(gcoef, t)
        D = polyval(dcoef, t)
        Sv = C @ np.linalg.solve(G, C.T)
        P = K[:, n:] * inv_eps
        return -(K @ A + A.T @ K) + P @ P.T - K @ Sv @ K - D

    ts = np.empty(max_steps + 1)
    ys = np.empty((max_steps + 1, N, N))
    fs = np.empty((max_steps + 1, N, N))
    t = t_f
    y = F.copy()
    f = rhs(t, y)
    ts[0] = t
    ys[0] = y
    fs[0] = f
    count = 1

    h = t_f / 100.0
    k = np.empty((7, N, N))
    while t > 1e-14:
        if count > max_steps:
            return STATUS_MAX_STEPS, count, ts, ys, fs
        h = min(h, h_dense, t)
        if t >= layer_start:
            h = min(h, layer_cap)
        hs = -h

        k[0] = f
        failed = False
        for i in range(1, 7):
            yi = y.copy()
            for j in range(i):
                a = _DP_A[i, j]
                if a != 0.0:
                    yi = yi + (hs * a) * k[j]
            if not np.all(np.isfinite(yi)):
                failed = True
                break
            k[i] = rhs(t + _DP_C[i] * hs, yi)
            if not np.all(np.isfinite(k[i])):
                failed = True
                break

        y5 = y
        if not failed:
            y5 = y.copy()
            y4 = y.copy()
            for i in range(7):
                if _DP_B5[i] != 0.0:
                    y5 = y5 + (hs * _DP_B5[i]) * k[i]
                if _DP_B4[i] != 0.0:
                    y4 = y4 + (hs * _DP_B4[i]) * k[i]
            failed = not np.all(np.isfinite(y5)) or np.sqrt(np.sum(y5 * y5)) > _OVERFLOW_GUARD

        if failed:
            if h <= max(h_min, _BLOWUP_REFINE):
                ts[count] = t + hs
                return STATUS_BLOWUP, count, ts, ys, fs
            h *= 0.5
            continue

        errsum = 0.0
        for r in range(N):
            for c in range(N):
                scale = atol + rtol * max(abs(y[r, c]), abs(y5[r, c]))
                d = (y5[r, c] - y4[r, c]) / scale
                errsum += d * d
        err = np.sqrt(errsum / (N * N))

        if err <= 1.0:
            t += hs
            y = 0.5 * (y5 + y5.T)
            f = rhs(t, y)
            ts[count] = t
            ys[count] = y
            fs[count] = f
            count += 1
        factor = 0.9 * (err + 1e-300) ** -0.2
        factor = min(5.0, max(0.2, factor))
        h *= factor
        if h < h_min:
            if err > 1.0:
                if np.sqrt(np.sum(y * y)) > 1e6:
                    ts[count] = t
                    return STATUS_BLOWUP, count, ts, ys, fs
                return STATUS_MAX_STEPS, count, ts, ys, fs
            h = h_min
    return STATUS_OK, count, ts, ys, fs


def _detect_backend() -> str:
    choice = os.environ.get("CHEAPGAME_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"CHEAPGAME_BACKEND must be auto, numba, or numpy (got {choice!r})")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


_BACKEND = _detect_backend()
_compiled = None


def backend() -> str:
    """Active backend name: "numba" or "numpy"."""
    return _BACKEND


def riccati_kernel():
    """The backward Riccati driver for the active backend (compiled lazily)."""
    global _compiled
    if _BACKEND == "numpy":
        return _solve_K_backward
    if _compiled is None:
        from numba import njit

        _compiled = njit(cache=True)(_solve_K_backward)
    return _compiled


def riccati_kernel_numpy():
    """The uncompiled driver, for backend cross-checks and benchmarks."""
    return _solve_K_backward
