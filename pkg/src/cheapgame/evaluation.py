"""Value approximations, guaranteed results, and epsilon-sweep error reports.

Three backward problems built around the approximate feedback pair: a
linear one for the realized cost of the pair, and two Riccati problems for
the guaranteed results of each player's approximate law alone. All three
share the closed-loop matrix built from K0, so they inherit the same
boundary-layer stiffness as the exact solve and use the same step cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cheapgame.asymptotic import AsymptoticSolution, build_asymptotic_solution
from cheapgame.exact import ExactSolution, extract_blocks, solve_exact
from cheapgame.model import GameSpec
from cheapgame.ode import (
    IntegratorConfig,
    MatrixTrajectory,
    boundary_layer_cap,
    integrate_terminal,
)


def _k0_fn(spec: GameSpec, asym: AsymptoticSolution | None, k0=None):
    if k0 is not None:
        return k0
    if asym is None:
        raise ValueError("need either an AsymptoticSolution or an explicit k0 callable")
    eps = spec.epsilon
    return lambda t: asym.assemble_K0(t, eps)


def _su_times(spec: GameSpec, M: np.ndarray) -> np.ndarray:
    """S_u(eps) M without forming eps^-2 B B^T: only the fast rows survive."""
    out = np.zeros_like(M)
    out[spec.n:, :] = M[spec.n:, :] / spec.epsilon**2
    return out


def solve_L(spec: GameSpec, asym: AsymptoticSolution | None = None, cfg: IntegratorConfig | None = None, k0=None) -> MatrixTrajectory:
    """Realized cost of the approximate pair: linear Lyapunov-type backward problem."""
    cfg = cfg or IntegratorConfig()
    k0 = _k0_fn(spec, asym, k0)
    A = spec.A_full()
    n = spec.n
    inv_eps = 1.0 / spec.epsilon

    def rhs(t, L):
        K0 = k0(t)
        Sv = spec.Sv(t)
        Acl = A(t) - _su_times(spec, K0) + Sv @ K0
        Q = K0[:, n:] * inv_eps
        Dcl = spec.D_full(t) + Q @ Q.T - K0 @ Sv @ K0
        return -(L @ Acl + Acl.T @ L) - Dcl

    return _solve_backward(spec, rhs, cfg)


def solve_M(spec: GameSpec, asym: AsymptoticSolution | None = None, cfg: IntegratorConfig | None = None, k0=None) -> MatrixTrajectory:
    """Guaranteed result of the approximate minimizer law (Riccati, maximizer free)."""
    cfg = cfg or IntegratorConfig()
    k0 = _k0_fn(spec, asym, k0)
    A = spec.A_full()
    n = spec.n
    inv_eps = 1.0 / spec.epsilon

    def rhs(t, M):
        K0 = k0(t)
        Au = A(t) - _su_times(spec, K0)
        Q = K0[:, n:] * inv_eps
        Du = spec.D_full(t) + Q @ Q.T
        return -(M @ Au + Au.T @ M) - M @ spec.Sv(t) @ M - Du

    return _solve_backward(spec, rhs, cfg, blowup_hint="guaranteed result of the approximate minimizer law is unbounded")


def solve_N(spec: GameSpec, asym: AsymptoticSolution | None = None, cfg: IntegratorConfig | None = None, k0=None) -> MatrixTrajectory:
    """Guaranteed result of the approximate maximizer law (Riccati, minimizer free)."""
    cfg = cfg or IntegratorConfig()
    k0 = _k0_fn(spec, asym, k0)
    A = spec.A_full()
    n = spec.n
    inv_eps = 1.0 / spec.epsilon

    def rhs(t, Nm):
        K0 = k0(t)
        Sv = spec.Sv(t)
        Av = A(t) + Sv @ K0
        P = Nm[:, n:] * inv_eps
        Dv = spec.D_full(t) - K0 @ Sv @ K0
        return -(Nm @ Av + Av.T @ Nm) + P @ P.T - Dv

    return _solve_backward(spec, rhs, cfg, blowup_hint="guaranteed result of the approximate maximizer law is unbounded")


def _solve_backward(spec, rhs, cfg, blowup_hint=None):
    from dataclasses import replace

    from cheapgame.ode import BlowupError

    scfg = replace(cfg, symmetrize=True)
    cap = boundary_layer_cap(spec.t_f, spec.epsilon)
    try:
        return integrate_terminal(rhs, spec.F_full(), spec.t_f, scfg, h_cap=cap)
    except BlowupError as exc:
        if blowup_hint:
            raise BlowupError(exc.t_escape, f"{blowup_hint} (escape near t = {exc.t_escape:.4f})") from exc
        raise


def psi_weight(spec: GameSpec, eps: float | None = None) -> float:
    """Initial-state weight of the value error bound (also the minimizer-side weight)."""
    eps = spec.epsilon if eps is None else eps
    z1, z2, z3 = _z0_split(spec)
    return z1**2 + eps * (2 * z1 * z2 + z2**2 + 2 * z1 * z3) + eps**2 * (2 * z2 * z3 + z3**2)


def psi_weight_v(spec: GameSpec, eps: float | None = None) -> float:
    """Initial-state weight of the maximizer-side guaranteed-result bound."""
    eps = spec.epsilon if eps is None else eps
    z1, z2, z3 = _z0_split(spec)
    return z1**2 + eps * (2 * z1 * z2 + 2 * z1 * z3) + eps**2 * (z2 + z3) ** 2


def _z0_split(spec: GameSpec):
    n, m1 = spec.n, spec.m1
    z0 = spec.z0
    return (
        float(np.linalg.norm(z0[:n])),
        float(np.linalg.norm(z0[n:n + m1])),
        float(np.linalg.norm(z0[n + m1:])),
    )


@dataclass
class ValueReport:
    epsilon: float
    J_star: float
    J_eps0: float
    J_u_eps0: float
    J_v_eps0: float
    psi: float
    psi_u: float
    psi_v: float

    @property
    def abs_err(self) -> float:
        return abs(self.J_star - self.J_eps0)

    @property
    def abs_err_u(self) -> float:
        return abs(self.J_star - self.J_u_eps0)

    @property
    def abs_err_v(self) -> float:
        return abs(self.J_star - self.J_v_eps0)

    def rel_err_percent(self, which: str = "J_eps0") -> float | None:
        delta = {"J_eps0": self.abs_err, "J_u_eps0": self.abs_err_u, "J_v_eps0": self.abs_err_v}[which]
        if abs(self.J_star) < 1e-12:
            return None
        return 100.0 * delta / abs(self.J_star)

    def c_fit(self, which: str = "J_eps0") -> float | None:
        """Empirical constant Delta / (eps^2 psi); None when the weight vanishes."""
        psi = {"J_eps0": self.psi, "J_u_eps0": self.psi_u, "J_v_eps0": self.psi_v}[which]
        delta = {"J_eps0": self.abs_err, "J_u_eps0": self.abs_err_u, "J_v_eps0": self.abs_err_v}[which]
        if psi <= 0:
            return None
        return delta / (self.epsilon**2 * psi)


def value_report(
    spec: GameSpec,
    exact: ExactSolution,
    L: MatrixTrajectory,
    M: MatrixTrajectory,
    N: MatrixTrajectory,
) -> ValueReport:
    z0 = spec.z0
    return ValueReport(
        epsilon=spec.epsilon,
        J_star=exact.value,
        J_eps0=float(z0 @ L(0.0) @ z0),
        J_u_eps0=float(z0 @ M(0.0) @ z0),
        J_v_eps0=float(z0 @ N(0.0) @ z0),
        psi=psi_weight(spec),
        psi_u=psi_weight(spec),
        psi_v=psi_weight_v(spec),
    )


@dataclass
class SweepReport:
    reports: list[ValueReport] = field(default_factory=list)
    trajectory_errors: dict[float, float] = field(default_factory=dict)  # eps -> E(eps)
    failures: dict[float, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def eps_values(self) -> list[float]:
        return [r.epsilon for r in self.reports]

    def non_monotone(self) -> bool:
        deltas = [r.abs_err for r in self.reports]
        return any(b > a for a, b in zip(deltas, deltas[1:]))


def trajectory_error(exact: ExactSolution, asym: AsymptoticSolution) -> float:
    """E(eps) = max over blocks and grid points of ||K_alpha - K_alpha,0||."""
    blocks = extract_blocks(exact)
    eps = exact.epsilon
    worst = 0.0
    for alpha in range(1, 7):
        traj = blocks[alpha]
        for t, val in zip(traj.grid, traj.values):
            diff = val - asym.k_alpha(alpha, float(t), eps)
            worst = max(worst, float(np.linalg.norm(diff)))
    return worst


def convergence_sweep(
    spec: GameSpec,
    eps_list,
    cfg: IntegratorConfig | None = None,
    asym: AsymptoticSolution | None = None,
    with_trajectory_error: bool = True,
) -> SweepReport:
    """Run the full evaluation for each epsilon, largest first.

    Solver failures for one epsilon are recorded and the sweep continues.
    """
    cfg = cfg or IntegratorConfig()
    eps_sorted = sorted(set(float(e) for e in eps_list), reverse=True)
    out = SweepReport()
    if len(eps_sorted) != len(list(eps_list)):
        out.warnings.append("duplicate epsilon entries were deduplicated")
    asym = asym or build_asymptotic_solution(spec, cfg)
    for eps in eps_sorted:
        sp = spec.with_epsilon(eps)
        try:
            exact = solve_exact(sp, cfg)
            L = solve_L(sp, asym, cfg)
            M = solve_M(sp, asym, cfg)
            N = solve_N(sp, asym, cfg)
        except Exception as exc:  # noqa: BLE001 - per-eps failures must not kill the sweep
            out.failures[eps] = str(exc)
            continue
        out.reports.append(value_report(sp, exact, L, M, N))
        if with_trajectory_error:
            out.trajectory_errors[eps] = trajectory_error(exact, asym)
    if out.non_monotone():
        out.warnings.append("absolute value error does not decrease monotonically over the sweep")
    return out


def write_error_tables(sweep: SweepReport, outdir) -> list[str]:
    """CSV tables (epsilon, J_star, J_approx, abs_err, rel_err_percent), one per approximation."""
    import os

    paths = []
    for which, fname in (
        ("J_eps0", "table_value_approx.csv"),
        ("J_u_eps0", "table_guaranteed_u.csv"),
        ("J_v_eps0", "table_guaranteed_v.csv"),
    ):
        path = os.path.join(outdir, fname)
        with open(path, "w") as fh:
            fh.write("epsilon,J_star,J_approx,abs_err,rel_err_percent\n")
            for r in sweep.reports:
                approx = getattr(r, which)
                delta = abs(r.J_star - approx)
                rel = r.rel_err_percent(which)
                rel_s = f"{rel:.6g}" if rel is not None else "nan"
                fh.write(f"{r.epsilon:.6g},{r.J_star:.6f},{approx:.6f},{delta:.6g},{rel_s}\n")
        paths.append(path)
    return paths
