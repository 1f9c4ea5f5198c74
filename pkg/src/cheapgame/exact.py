"""Exact saddle point: the full game Riccati terminal-value problem.

The quadratic term K S_u K with S_u = eps^-2 B B^T is evaluated as
P P^T with P = eps^-1 K B, so intermediates stay at eps^-1 magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from cheapgame import kernels
from cheapgame.model import GameSpec, PolyMatrix, poly_blockdiag
from cheapgame.ode import (
    BlowupError,
    IntegratorConfig,
    MatrixTrajectory,
    MaxStepsError,
    boundary_layer_cap,
    integrate_terminal,
)
from cheapgame.simulate import FeedbackLaw


def _lam_diag_poly(spec: GameSpec) -> PolyMatrix:
    deg = spec.lam.degree
    coeffs = np.zeros((deg + 1, spec.m, spec.m))
    for k in range(deg + 1):
        coeffs[k] = np.diag(spec.lam.coeffs[k, 0])
    return PolyMatrix(coeffs)


def _D_poly(spec: GameSpec) -> PolyMatrix:
    return poly_blockdiag([spec.D1, _lam_diag_poly(spec)])


def riccati_rhs(spec: GameSpec):
    """Pure-python RHS of the full Riccati equation, t -> dK/dt."""
    A = spec.A_full()
    C = spec.C_full()
    D = _D_poly(spec)
    G = spec.G
    n = spec.n
    inv_eps = 1.0 / spec.epsilon

    def rhs(t, K):
        At = A(t)
        Ct = C(t)
        Sv = Ct @ np.linalg.solve(G(t), Ct.T)
        P = K[:, n:] * inv_eps
        return -(K @ At + At.T @ K) + P @ P.T - K @ Sv @ K - D(t)

    return rhs


@dataclass
class ExactSolution:
    K: MatrixTrajectory
    epsilon: float
    spec: GameSpec

    @cached_property
    def value(self) -> float:
        """Game value z0^T K(0, eps) z0."""
        z0 = self.spec.z0
        return float(z0 @ self.K(0.0) @ z0)


def solve_exact(spec: GameSpec, cfg: IntegratorConfig | None = None) -> ExactSolution:
    """Solve the Riccati terminal-value problem for spec.epsilon.

    Blowup is reported as a failure of the solvability assumption for this
    epsilon, with the escape-time estimate attached.
    """
    if spec.epsilon <= 0:
        raise ValueError("epsilon must be positive")
    cfg = cfg or IntegratorConfig()
    eps = spec.epsilon
    t_f = spec.t_f
    rhs = riccati_rhs(spec)
    F = spec.F_full()
    cap = boundary_layer_cap(t_f, eps)
    try:
        if kernels.backend() == "numba" and cfg.method == "rk45":
            traj = _solve_via_kernel(spec, cfg)
        else:
            kcfg = IntegratorConfig(
                method=cfg.method,
                rtol=cfg.rtol,
                atol=cfg.atol,
                h_init=cfg.h_init,
                h_min=cfg.h_min,
                h_max=cfg.h_max,
                symmetrize=True,
                max_steps=cfg.max_steps,
                dense_points=cfg.dense_points,
            )
            traj = integrate_terminal(rhs, F, t_f, kcfg, h_cap=cap)
    except BlowupError as exc:
        raise BlowupError(
            exc.t_escape,
            f"Riccati solution escapes near t = {exc.t_escape:.4f}: "
            f"solvability assumption A1 fails for epsilon = {eps}",
        ) from exc
    return ExactSolution(K=traj, epsilon=eps, spec=spec)


def _solve_via_kernel(spec: GameSpec, cfg: IntegratorConfig) -> MatrixTrajectory:
    eps = spec.epsilon
    t_f = spec.t_f
    window = 10.0 * eps * max(math.log(1.0 / eps), 1.0)
    kern = kernels.riccati_kernel()
    status, count, ts, ys, fs = kern(
        np.ascontiguousarray(spec.A_full().coeffs),
        np.ascontiguousarray(spec.C_full().coeffs),
        np.ascontiguousarray(spec.G.coeffs),
        np.ascontiguousarray(_D_poly(spec).coeffs),
        np.ascontiguousarray(spec.F_full()),
        spec.n,
        1.0 / eps,
        t_f,
        cfg.rtol,
        cfg.atol,
        cfg.h_min,
        t_f / (cfg.dense_points - 1) if cfg.dense_points and cfg.dense_points > 1 else np.inf,
        t_f - window,
        0.5 * eps,
        cfg.max_steps,
    )
    if status == kernels.STATUS_BLOWUP:
        raise BlowupError(float(ts[count]))
    if status == kernels.STATUS_MAX_STEPS:
        raise MaxStepsError(f"step budget {cfg.max_steps} exhausted in Riccati kernel")
    grid = ts[:count][::-1].copy()
    grid[0] = max(grid[0], 0.0) if abs(grid[0]) < 1e-13 else grid[0]
    return MatrixTrajectory(grid, ys[:count][::-1].copy(), fs[:count][::-1].copy(), symmetric=True)


def extract_blocks(sol: ExactSolution, n: int | None = None, m1: int | None = None) -> dict[int, MatrixTrajectory]:
    """Scaled blocks K_1..K_6 with the eps and eps^2 factors divided out."""
    spec = sol.spec
    n = spec.n if n is None else n
    m1 = spec.m1 if m1 is None else m1
    eps = sol.epsilon
    a = slice(0, n)
    b = slice(n, n + m1)
    c = slice(n + m1, spec.N)
    scaled = {
        1: (a, a, 1.0),
        2: (a, b, eps),
        3: (a, c, eps),
        4: (b, b, eps),
        5: (b, c, eps**2),
        6: (c, c, eps**2),
    }
    out = {}
    for idx, (rs, cs, scale) in scaled.items():
        out[idx] = MatrixTrajectory(
            sol.K.grid,
            sol.K.values[:, rs, cs] / scale,
            sol.K.derivs[:, rs, cs] / scale,
            symmetric=idx in (1, 4, 6),
        )
    return out


def exact_feedback(sol: ExactSolution, spec: GameSpec | None = None) -> FeedbackLaw:
    """The saddle-point gains: u = -eps^-2 B^T K z, v = G^-1 C^T K z."""
    spec = spec or sol.spec
    n = spec.n
    inv_eps2 = 1.0 / sol.epsilon**2
    C = spec.C_full()

    def minimizer_gain(t):
        return -inv_eps2 * sol.K(t)[n:, :]

    def maximizer_gain(t):
        return np.linalg.solve(spec.G(t), C(t).T @ sol.K(t))

    return FeedbackLaw(minimizer_gain, maximizer_gain, label="exact")
