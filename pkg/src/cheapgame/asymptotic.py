"""Zero-order asymptotic solution: outer terms, boundary corrections, K0.

Outer terms solve the slow Riccati problems on [0, t_f]; the fast blocks
are algebraic in the outer layer and closed-form exponentials in the
stretched time tau = (t - t_f)/eps near the horizon. Nothing here ever
forms an eps^-2 quantity: the partition hands over B B^T only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from cheapgame.model import BlockPartition, GameSpec, partition as make_partition
from cheapgame.ode import (
    BlowupError,
    IntegratorConfig,
    MatrixTrajectory,
    integrate_terminal,
)
from cheapgame.simulate import FeedbackLaw

TAU_CUT_NUMERATOR = 600.0  # exponents below exp(-600) are returned as exact zero


class AssumptionViolation(RuntimeError):
    """A structural assumption needed by the asymptotic construction fails."""


def solve_outer_K1(part: BlockPartition, spec: GameSpec, cfg: IntegratorConfig | None = None) -> MatrixTrajectory:
    """Backward game Riccati problem for the slow-slow outer block."""
    cfg = cfg or IntegratorConfig()
    A1 = part.Abar1
    A2 = part.Abar2
    D1 = spec.D1

    def rhs(t, K):
        A1t = A1(t)
        A2t = A2(t)
        Q = A2t @ np.diag(1.0 / part.lam1(t)[0]) @ A2t.T - part.Sv1(t)
        return -(K @ A1t + A1t.T @ K) + K @ Q @ K - D1(t)

    scfg = _sym_cfg(cfg)
    try:
        return integrate_terminal(rhs, spec.F1, spec.t_f, scfg)
    except BlowupError as exc:
        raise BlowupError(
            exc.t_escape,
            f"outer Riccati solution escapes near t = {exc.t_escape:.4f}: "
            "assumption A4 fails (reduced game has no value on the whole horizon)",
        ) from exc


def solve_outer_K6(part: BlockPartition, cfg: IntegratorConfig | None = None) -> MatrixTrajectory:
    """Backward control Riccati problem for the zero-weight fast-fast outer block."""
    cfg = cfg or IntegratorConfig()
    A9 = part.Abar9
    A6 = part.Abar6
    m2 = part.m - part.m1

    def rhs(t, K):
        A9t = A9(t)
        A6t = A6(t)
        return -(K @ A9t + A9t.T @ K) + K @ K - A6t.T @ A6t

    return integrate_terminal(rhs, np.zeros((m2, m2)), part.spec.t_f, _sym_cfg(cfg))


def _sym_cfg(cfg: IntegratorConfig) -> IntegratorConfig:
    from dataclasses import replace

    return replace(cfg, symmetrize=True)


@dataclass
class BoundaryCorrections:
    """Closed-form boundary-layer terms in the stretched time tau <= 0.

    All three are diagonal-exponential expressions frozen at t_f; entries
    accept complex tau so derivative checks can use the complex-step trick.
    """

    sqrt_lam_tf: np.ndarray  # (m1,)
    F1A2L: np.ndarray  # F1 Abar2(t_f) Lambda^{-1/2}(t_f), n x m1
    A6_tf: np.ndarray  # m1 x (m - m1)
    beta: float

    def _h12(self, tau):
        # diagonal of H1^2 H2 = exp(2 sqrt(lam) tau) / (1 + exp(2 sqrt(lam) tau))
        e2 = np.exp(2.0 * self.sqrt_lam_tf * tau)
        return e2 / (1.0 + e2)

    def _h1h2(self, tau):
        e1 = np.exp(self.sqrt_lam_tf * tau)
        return e1 / (1.0 + e1 * e1)

    def _cut(self, tau) -> bool:
        return not np.iscomplexobj(np.asarray(tau)) and tau < -TAU_CUT_NUMERATOR / (2.0 * self.beta)

    def K2b(self, tau):
        if self._cut(tau):
            return np.zeros_like(self.F1A2L)
        return -2.0 * self.F1A2L * self._h12(tau)[None, :]

    def K4b(self, tau):
        if self._cut(tau):
            return np.zeros((len(self.sqrt_lam_tf), len(self.sqrt_lam_tf)))
        return np.diag(-2.0 * self.sqrt_lam_tf * self._h12(tau))

    def K5b(self, tau):
        if self._cut(tau):
            return np.zeros_like(self.A6_tf)
        return -2.0 * self._h1h2(tau)[:, None] * self.A6_tf

    def decay_constants(self, n_points: int = 400) -> dict[str, float]:
        """Fitted envelope constants a2, a4, a5 over tau in [-40/beta, 0]."""
        taus = np.linspace(-40.0 / self.beta, 0.0, n_points)
        a2 = max(np.linalg.norm(self.K2b(t)) * math.exp(-2 * self.beta * t) for t in taus)
        a4 = max(np.linalg.norm(self.K4b(t)) * math.exp(-2 * self.beta * t) for t in taus)
        a5 = max(np.linalg.norm(self.K5b(t)) * math.exp(-self.beta * t) for t in taus)
        return {"a2": float(a2), "a4": float(a4), "a5": float(a5)}


def boundary_corrections(part: BlockPartition, spec: GameSpec) -> BoundaryCorrections:
    lam_tf = part.lam1(spec.t_f)[0]
    sqrt_lam = np.sqrt(lam_tf)
    A2_tf = part.Abar2(spec.t_f)
    return BoundaryCorrections(
        sqrt_lam_tf=sqrt_lam,
        F1A2L=spec.F1 @ A2_tf @ np.diag(1.0 / sqrt_lam),
        A6_tf=part.Abar6(spec.t_f),
        beta=float(sqrt_lam.min()),
    )


@dataclass
class AsymptoticSolution:
    spec: GameSpec
    part: BlockPartition
    K1o: MatrixTrajectory
    K6o: MatrixTrajectory
    boundary: BoundaryCorrections

    @property
    def beta(self) -> float:
        return self.boundary.beta

    @cached_property
    def beta_bar(self) -> float:
        ts = np.linspace(0.0, self.spec.t_f, 201)
        return float(min(np.sqrt(self.part.lam1(t)[0]).min() for t in ts))

    # outer terms -----------------------------------------------------------
    def K2o(self, t: float) -> np.ndarray:
        A2t = self.part.Abar2(t)
        return self.K1o(t) @ A2t @ np.diag(1.0 / np.sqrt(self.part.lam1(t)[0]))

    def K3o(self, t: float) -> np.ndarray:
        return np.zeros((self.spec.n, self.spec.m - self.spec.m1))

    def K4o(self, t: float) -> np.ndarray:
        return np.diag(np.sqrt(self.part.lam1(t)[0]))

    def K5o(self, t: float) -> np.ndarray:
        return self.part.Abar6(t)

    # composite terms and assembly ------------------------------------------
    def k_alpha(self, alpha: int, t: float, eps: float | None = None) -> np.ndarray:
        """K_alpha,0(t, eps) = outer(t) + boundary((t - t_f)/eps)."""
        eps = self.spec.epsilon if eps is None else eps
        tau = (t - self.spec.t_f) / eps
        if alpha == 1:
            return self.K1o(t)
        if alpha == 2:
            return self.K2o(t) + self.boundary.K2b(tau)
        if alpha == 3:
            return self.K3o(t)
        if alpha == 4:
            return self.K4o(t) + self.boundary.K4b(tau)
        if alpha == 5:
            return self.K5o(t) + self.boundary.K5b(tau)
        if alpha == 6:
            return self.K6o(t)
        raise ValueError(f"alpha must be 1..6, got {alpha}")

    def assemble_K0(self, t: float, eps: float | None = None) -> np.ndarray:
        """The (n+m)x(n+m) approximate Riccati matrix with eps block scalings."""
        eps = self.spec.epsilon if eps is None else eps
        n, m1, N = self.spec.n, self.spec.m1, self.spec.N
        a, b, c = slice(0, n), slice(n, n + m1), slice(n + m1, N)
        K0 = np.zeros((N, N))
        K2 = self.k_alpha(2, t, eps)
        K5 = self.k_alpha(5, t, eps)
        K0[a, a] = self.k_alpha(1, t, eps)
        K0[a, b] = eps * K2
        K0[b, a] = eps * K2.T
        K0[b, b] = eps * self.k_alpha(4, t, eps)
        K0[b, c] = eps**2 * K5
        K0[c, b] = eps**2 * K5.T
        K0[c, c] = eps**2 * self.k_alpha(6, t, eps)
        return K0

    def approximate_feedback(self, eps: float | None = None) -> FeedbackLaw:
        """Feedback pair built from K0 in place of the exact Riccati matrix."""
        eps = self.spec.epsilon if eps is None else eps
        spec = self.spec
        n = spec.n
        inv_eps2 = 1.0 / eps**2
        C = spec.C_full()

        def minimizer_gain(t):
            return -inv_eps2 * self.assemble_K0(t, eps)[n:, :]

        def maximizer_gain(t):
            K0 = self.assemble_K0(t, eps)
            return np.linalg.solve(spec.G(t), C(t).T @ K0)

        return FeedbackLaw(minimizer_gain, maximizer_gain, label="asymptotic")


def build_asymptotic_solution(spec: GameSpec, cfg: IntegratorConfig | None = None) -> AsymptoticSolution:
    """Construct the full zero-order approximation for a validated spec."""
    part = make_partition(spec)
    if not part.assumption_A2_satisfied:
        raise AssumptionViolation(
            "assumption A2 violated: the slow-to-zero-weight-fast coupling block "
            "of A2(t) is not identically zero; the asymptotic construction does not apply"
        )
    K1o = solve_outer_K1(part, spec, cfg)
    K6o = solve_outer_K6(part, cfg)
    return AsymptoticSolution(
        spec=spec,
        part=part,
        K1o=K1o,
        K6o=K6o,
        boundary=boundary_corrections(part, spec),
    )


@dataclass
class ReducedGameSolution:
    K1o: MatrixTrajectory
    value: float
    minimizer_gain: object  # t -> m1 x n, acting on the slow state only
    maximizer_gain: object  # t -> l x n


def solve_reduced_game(part: BlockPartition, spec: GameSpec, cfg: IntegratorConfig | None = None) -> ReducedGameSolution:
    """The eps = 0 limit game where the positive-weight fast block is the minimizer's control.

    Gains use the dimensionally consistent transposes of the first-order
    optimality conditions: y = -Lambda^-1 Abar2^T K1 x, v = G^-1 C1^T K1 x.
    """
    if not part.assumption_A2_satisfied:
        raise AssumptionViolation(
            "assumption A2 violated: reduced game is singular without it"
        )
    K1o = solve_outer_K1(part, spec, cfg)
    value = float(spec.x0 @ K1o(0.0) @ spec.x0)

    def minimizer_gain(t):
        return -np.diag(1.0 / part.lam1(t)[0]) @ part.Abar2(t).T @ K1o(t)

    def maximizer_gain(t):
        return np.linalg.solve(spec.G(t), spec.C1(t).T @ K1o(t))

    return ReducedGameSolution(K1o=K1o, value=value, minimizer_gain=minimizer_gain, maximizer_gain=maximizer_gain)
