"""Matrix-valued ODE integration with dense output.

A single explicit Dormand-Prince 5(4) driver serves both terminal-value
(backward) and initial-value (forward) problems; a fixed-step classical
RK4 mode is kept for order-verification runs. Trajectories store the RHS
at every accepted point so evaluation between nodes is cubic Hermite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OVERFLOW_GUARD = 1e12
BLOWUP_REFINE = 1e-4


class BlowupError(RuntimeError):
    """Solution norm exceeded the overflow guard (finite escape time)."""

    def __init__(self, t_escape: float, message: str = ""):
        self.t_escape = t_escape
        super().__init__(message or f"solution blew up near t = {t_escape:.6f}")


class MaxStepsError(RuntimeError):
    pass


@dataclass
class IntegratorConfig:
    method: str = "rk45"  # "rk45" (adaptive) or "rk4" (fixed step)
    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: float | None = None
    h_min: float = 1e-13
    h_max: float = math.inf
    symmetrize: bool = False
    max_steps: int = 1_000_000
    dense_points: int = 401  # caps the step at span/(dense_points-1) so the
    # grid is at least this fine and Hermite evaluation stays accurate

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.h_init is not None and not (self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need h_min <= h_init <= h_max")


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


class MatrixTrajectory:
    """A matrix-valued function of t on [grid[0], grid[-1]].

    Stored values are exact at grid points; between points evaluation is the
    cubic Hermite interpolant built from values and stored derivatives.
    """

    def __init__(self, grid, values, derivs, symmetric: bool = False):
        self.grid = np.asarray(grid, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.derivs = np.asarray(derivs, dtype=float)
        self.symmetric = symmetric
        if self.grid.ndim != 1 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if len(self.values) != len(self.grid) or len(self.derivs) != len(self.grid):
            raise ValueError("values/derivs length must match grid")

    @property
    def t0(self) -> float:
        return float(self.grid[0])

    @property
    def t1(self) -> float:
        return float(self.grid[-1])

    @property
    def shape(self):
        return self.values.shape[1:]

    def _locate(self, t: float) -> int:
        if t < self.grid[0] - 1e-12 or t > self.grid[-1] + 1e-12:
            raise ValueError(f"t = {t} outside trajectory range [{self.grid[0]}, {self.grid[-1]}]")
        i = int(np.searchsorted(self.grid, t, side="right")) - 1
        return min(max(i, 0), len(self.grid) - 2)

    def __call__(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.grid, t))
        if i < len(self.grid) and self.grid[i] == t:
            return self.values[i].copy()
        i = self._locate(t)
        h = self.grid[i + 1] - self.grid[i]
        s = (t - self.grid[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (
            h00 * self.values[i]
            + h10 * h * self.derivs[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.derivs[i + 1]
        )

    def derivative(self, t: float) -> np.ndarray:
        """Derivative of the Hermite interpolant (equals the stored RHS at nodes)."""
        i = int(np.searchsorted(self.grid, t))
        if i < len(self.grid) and self.grid[i] == t:
            return self.derivs[i].copy()
        i = self._locate(t)
        h = self.grid[i + 1] - self.grid[i]
        s = (t - self.grid[i]) / h
        d00 = (6 * s * s - 6 * s) / h
        d10 = 3 * s * s - 4 * s + 1
        d01 = (6 * s - 6 * s * s) / h
        d11 = 3 * s * s - 2 * s
        return (
            d00 * self.values[i]
            + d10 * self.derivs[i]
            + d01 * self.values[i + 1]
            + d11 * self.derivs[i + 1]
        )

    def with_points(self, ts, rhs) -> "MatrixTrajectory":
        """Return a trajectory whose grid additionally contains ts (derivs from rhs)."""
        extra = [t for t in np.atleast_1d(ts) if np.min(np.abs(self.grid - t)) > 1e-12]
        if not extra:
            return self
        vals = [self(t) for t in extra]
        ders = [rhs(t, v) for t, v in zip(extra, vals)]
        grid = np.concatenate([self.grid, extra])
        order = np.argsort(grid)
        values = np.concatenate([self.values, np.array(vals)])[order]
        derivs = np.concatenate([self.derivs, np.array(ders)])[order]
        return MatrixTrajectory(grid[order], values, derivs, self.symmetric)


def boundary_layer_cap(t_f: float, eps: float, width_factor: float = 10.0):
    """Step cap resolving the O(eps) layer at t_f: h <= eps/2 inside the layer window."""
    window = width_factor * eps * max(math.log(1.0 / eps), 1.0)

    def cap(t: float) -> float:
        return 0.5 * eps if t >= t_f - window else math.inf

    return cap


def _err_norm(y, ynew, delta, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
    return float(np.sqrt(np.mean((delta / scale) ** 2)))


def _sym(V):
    return 0.5 * (V + V.T)


def _integrate(rhs, y_start, t_start, t_end, cfg: IntegratorConfig, h_cap=None):
    """Advance from t_start to t_end (either direction), returning (ts, ys, fs)."""
    shape = y_start.shape
    direction = 1.0 if t_end > t_start else -1.0
    span = abs(t_end - t_start)
    t = t_start
    y = y_start.copy()
    if cfg.symmetrize:
        y = _sym(y)
    f = rhs(t, y)
    ts, ys, fs = [t], [y.copy()], [f.copy()]

    if cfg.method == "rk4":
        nsteps = max(int(math.ceil(span / cfg.h_init)) if cfg.h_init else 400, 1)
        h = direction * span / nsteps
        for _ in range(nsteps):
            k1 = f
            k2 = rhs(t + h / 2, y + h / 2 * k1)
            k3 = rhs(t + h / 2, y + h / 2 * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            if cfg.symmetrize:
                y = _sym(y)
            t += h
            if not np.all(np.isfinite(y)) or np.linalg.norm(y) > OVERFLOW_GUARD:
                raise BlowupError(t)
            f = rhs(t, y)
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
        return np.array(ts), np.array(ys), np.array(fs)

    h = cfg.h_init if cfg.h_init is not None else span / 100.0
    h_dense = span / (cfg.dense_points - 1) if cfg.dense_points and cfg.dense_points > 1 else math.inf
    nsteps = 0
    while direction * (t_end - t) > 1e-14 * max(1.0, abs(t_end)):
        nsteps += 1
        if nsteps > cfg.max_steps:
            raise MaxStepsError(f"step budget {cfg.max_steps} exhausted at t = {t:.6f}")
        h = min(h, cfg.h_max, h_dense, abs(t_end - t))
        if h_cap is not None:
            h = min(h, h_cap(t))
        hs = direction * h

        k = np.empty((7,) + shape)
        k[0] = f
        failed = False
        for i in range(1, 7):
            yi = y + hs * sum(a * k[j] for j, a in enumerate(_A[i]))
            if not np.all(np.isfinite(yi)):
                failed = True
                break
            k[i] = rhs(t + _C[i] * hs, yi)
            if not np.all(np.isfinite(k[i])):
                failed = True
                break
        if not failed:
            y5 = y + hs * np.tensordot(_B5, k, axes=1)
            y4 = y + hs * np.tensordot(_B4, k, axes=1)
            failed = not np.all(np.isfinite(y5)) or np.linalg.norm(y5) > OVERFLOW_GUARD

        if failed:
            if h <= max(cfg.h_min, BLOWUP_REFINE):
                raise BlowupError(t + hs)
            h *= 0.5
            continue

        err = _err_norm(y, y5, y5 - y4, cfg.rtol, cfg.atol)
        if err <= 1.0:
            t += hs
            y = _sym(y5) if cfg.symmetrize else y5
            f = k[6] if not cfg.symmetrize else rhs(t, y)
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
        factor = 0.9 * (err + 1e-300) ** -0.2
        h *= min(5.0, max(0.2, factor))
        if h < cfg.h_min:
            if err > 1.0:
                if np.linalg.norm(y) > 1e6:  # unresolvable step at huge amplitude
                    raise BlowupError(t)
                raise MaxStepsError(f"step size underflow (h = {h:.3e}) at t = {t:.6f}")
            h = cfg.h_min
    return np.array(ts), np.array(ys), np.array(fs)


def _to_trajectory(ts, ys, fs, cfg: IntegratorConfig, reverse: bool) -> MatrixTrajectory:
    if reverse:
        ts, ys, fs = ts[::-1], ys[::-1], fs[::-1]
    return MatrixTrajectory(ts, ys, fs, symmetric=cfg.symmetrize)


def integrate_terminal(rhs, terminal_value, t_f: float, cfg: IntegratorConfig | None = None, h_cap=None) -> MatrixTrajectory:
    """Solve dV/dt = rhs(t, V) backward from V(t_f) = terminal_value down to t = 0."""
    cfg = cfg or IntegratorConfig()
    y_end = np.atleast_2d(np.asarray(terminal_value, dtype=float))
    ts, ys, fs = _integrate(rhs, y_end, t_f, 0.0, cfg, h_cap)
    return _to_trajectory(ts, ys, fs, cfg, reverse=True)


def integrate_initial(rhs, initial_value, t0: float, t_f: float, cfg: IntegratorConfig | None = None, h_cap=None) -> MatrixTrajectory:
    """Solve dV/dt = rhs(t, V) forward from V(t0) = initial_value up to t_f."""
    cfg = cfg or IntegratorConfig()
    y0 = np.atleast_2d(np.asarray(initial_value, dtype=float))
    ts, ys, fs = _integrate(rhs, y0, t0, t_f, cfg, h_cap)
    return _to_trajectory(ts, ys, fs, cfg, reverse=False)
