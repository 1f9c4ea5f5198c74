"""Closed-loop simulation under time-varying linear feedback pairs.

The running cost is integrated as an augmented ODE state so it shares the
adaptive error control of the state propagation; a trapezoid quadrature of
the sampled integrand is kept alongside as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from cheapgame.model import GameSpec
from cheapgame.ode import IntegratorConfig, integrate_initial


@dataclass
class FeedbackLaw:
    """A pair of time-varying linear state-feedback gains.

    minimizer_gain(t) is m x (n+m), maximizer_gain(t) is l x (n+m); the
    controls are u = minimizer_gain(t) z and v = maximizer_gain(t) z, which
    keeps every simulated pair admissible.
    """

    minimizer_gain: Callable[[float], np.ndarray]
    maximizer_gain: Callable[[float], np.ndarray]
    label: str = "custom"


@dataclass
class TrajectoryRecord:
    grid: np.ndarray
    states: np.ndarray  # (T, n+m)
    controls_u: np.ndarray  # (T, m)
    controls_v: np.ndarray  # (T, l)
    running_cost: np.ndarray  # (T,)
    integrand: np.ndarray  # (T,)
    total_cost: float
    label: str = ""

    def trapezoid_cost(self) -> float:
        """Post-hoc quadrature of the sampled integrand plus the terminal term."""
        terminal = self.total_cost - self.running_cost[-1]
        trapezoid = getattr(np, "trapezoid", np.trapz)
        return float(trapezoid(self.integrand, self.grid)) + terminal


def _zero_gains(spec: GameSpec) -> FeedbackLaw:
    Zu = np.zeros((spec.m, spec.N))
    Zv = np.zeros((spec.l, spec.N))
    return FeedbackLaw(lambda t: Zu, lambda t: Zv, label="zero")


def simulate(spec: GameSpec, law: FeedbackLaw | None = None, cfg: IntegratorConfig | None = None) -> TrajectoryRecord:
    """Integrate the closed loop from z0 and accumulate the cost functional."""
    law = law or _zero_gains(spec)
    cfg = cfg or IntegratorConfig()
    n, N = spec.n, spec.N
    A = spec.A_full()
    C = spec.C_full()
    eps2 = spec.epsilon**2

    gu0 = law.minimizer_gain(0.0)
    gv0 = law.maximizer_gain(0.0)
    if gu0.shape != (spec.m, N):
        raise ValueError(f"minimizer gain shape {gu0.shape}, expected {(spec.m, N)}")
    if gv0.shape != (spec.l, N):
        raise ValueError(f"maximizer gain shape {gv0.shape}, expected {(spec.l, N)}")

    def rhs(t, w):
        z = w[:N, 0]
        u = law.minimizer_gain(t) @ z
        v = law.maximizer_gain(t) @ z
        dz = A(t) @ z
        dz[n:] += u
        dz += C(t) @ v
        cost = z @ spec.D_full(t) @ z + eps2 * (u @ u) - v @ spec.G(t) @ v
        out = np.empty_like(w)
        out[:N, 0] = dz
        out[N, 0] = cost
        return out

    w0 = np.concatenate([spec.z0, [0.0]])[:, None]
    traj = integrate_initial(rhs, w0, 0.0, spec.t_f, cfg)
    # refine the output near t_f so layer behaviour of the controls is resolved
    layer_ts = np.arange(max(0.0, spec.t_f - 10 * spec.epsilon), spec.t_f, spec.epsilon / 5.0)
    if len(layer_ts):
        traj = traj.with_points(layer_ts, rhs)

    grid = traj.grid
    states = traj.values[:, :N, 0]
    running = traj.values[:, N, 0]
    us = np.array([law.minimizer_gain(t) @ z for t, z in zip(grid, states)])
    vs = np.array([law.maximizer_gain(t) @ z for t, z in zip(grid, states)])
    integrand = np.array(
        [
            z @ spec.D_full(t) @ z + eps2 * (u @ u) - v @ spec.G(t) @ v
            for t, z, u, v in zip(grid, states, us, vs)
        ]
    )
    zf = states[-1]
    total = float(running[-1] + zf @ spec.F_full() @ zf)
    return TrajectoryRecord(
        grid=grid,
        states=states,
        controls_u=us,
        controls_v=vs,
        running_cost=running,
        integrand=integrand,
        total_cost=total,
        label=law.label,
    )


@dataclass
class ChannelPeak:
    channel: str
    peak: float
    t_peak: float


@dataclass
class ControlHistories:
    grid: np.ndarray
    u: np.ndarray
    v: np.ndarray
    peaks: list[ChannelPeak] = field(default_factory=list)

    def peak(self, channel: str) -> ChannelPeak:
        for p in self.peaks:
            if p.channel == channel:
                return p
        raise KeyError(channel)


def control_histories(rec: TrajectoryRecord) -> ControlHistories:
    """Per-channel control time series with peak magnitude and peak time."""
    peaks = []
    for name, series in (("u", rec.controls_u), ("v", rec.controls_v)):
        for j in range(series.shape[1]):
            mags = np.abs(series[:, j])
            i = int(np.argmax(mags))
            peaks.append(ChannelPeak(f"{name}{j + 1}", float(mags[i]), float(rec.grid[i])))
    return ControlHistories(grid=rec.grid, u=rec.controls_u, v=rec.controls_v, peaks=peaks)


def export_csv(rec: TrajectoryRecord, path) -> None:
    """Columns: t, z_1.., u_1.., v_1.., running_cost."""
    N = rec.states.shape[1]
    m = rec.controls_u.shape[1]
    l = rec.controls_v.shape[1]
    header = (
        ["t"]
        + [f"z_{i + 1}" for i in range(N)]
        + [f"u_{i + 1}" for i in range(m)]
        + [f"v_{i + 1}" for i in range(l)]
        + ["running_cost"]
    )
    data = np.column_stack([rec.grid, rec.states, rec.controls_u, rec.controls_v, rec.running_cost])
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="")
