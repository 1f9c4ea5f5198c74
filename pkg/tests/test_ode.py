import math

import numpy as np
import pytest

from cheapgame.ode import (
    BlowupError,
    IntegratorConfig,
    MatrixTrajectory,
    MaxStepsError,
    boundary_layer_cap,
    integrate_initial,
    integrate_terminal,
)


def scalar_rhs(f):
    return lambda t, y: np.array([[f(t, y[0, 0])]])


class TestTrajectory:
    def test_hermite_reproduces_cubics(self):
        # value and derivative of any cubic are represented exactly
        grid = np.array([0.0, 0.8, 2.0])
        poly = np.polynomial.Polynomial([1.0, -2.0, 0.5, 0.25])
        vals = np.array([[[poly(t)]] for t in grid])
        ders = np.array([[[poly.deriv()(t)]] for t in grid])
        traj = MatrixTrajectory(grid, vals, ders)
        for t in np.linspace(0.0, 2.0, 33):
            assert np.isclose(traj(t)[0, 0], poly(t), atol=1e-12)
            assert np.isclose(traj.derivative(t)[0, 0], poly.deriv()(t), atol=1e-12)

    def test_out_of_range_raises(self):
        traj = MatrixTrajectory([0.0, 1.0], np.zeros((2, 1, 1)), np.zeros((2, 1, 1)))
        with pytest.raises(ValueError, match="outside"):
            traj(1.5)

    def test_with_points(self):
        rhs = scalar_rhs(lambda t, y: -y)
        traj = integrate_terminal(rhs, [[1.0]], 1.0)
        refined = traj.with_points([0.123, 0.456], rhs)
        assert 0.123 in refined.grid and 0.456 in refined.grid
        assert np.isclose(refined(0.123)[0, 0], traj(0.123)[0, 0], atol=1e-12)

    def test_monotone_grid_required(self):
        with pytest.raises(ValueError, match="increasing"):
            MatrixTrajectory([0.0, 0.0], np.zeros((2, 1, 1)), np.zeros((2, 1, 1)))


class TestAdaptive:
    def test_backward_linear_closed_form(self):
        # dy/dt = -y, y(2) = 1  =>  y(t) = exp(2 - t)
        traj = integrate_terminal(scalar_rhs(lambda t, y: -y), [[1.0]], 2.0)
        for t in np.linspace(0.0, 2.0, 41):
            assert np.isclose(traj(t)[0, 0], math.exp(2.0 - t), rtol=1e-7)

    def test_forward_riccati_closed_form(self):
        # dy/dt = -y^2, y(0) = 1  =>  y(t) = 1/(1 + t)
        traj = integrate_initial(scalar_rhs(lambda t, y: -y * y), [[1.0]], 0.0, 3.0)
        for t in np.linspace(0.0, 3.0, 31):
            assert np.isclose(traj(t)[0, 0], 1.0 / (1.0 + t), rtol=1e-7)

    def test_dense_step_cap(self):
        cfg = IntegratorConfig(dense_points=101)
        traj = integrate_terminal(scalar_rhs(lambda t, y: -y), [[1.0]], 1.0, cfg)
        assert np.max(np.diff(traj.grid)) <= 1.0 / 100 + 1e-12

    def test_stiff_layer_resolved(self):
        # eps y' = y backward from y(t_f) = 1: y(t) = exp((t - t_f)/eps),
        # exponentially contracting in the backward direction
        eps = 1e-3
        t_f = 1.0
        rhs = scalar_rhs(lambda t, y: y / eps)
        cap = boundary_layer_cap(t_f, eps)
        traj = integrate_terminal(rhs, [[1.0]], t_f, IntegratorConfig(), h_cap=cap)
        t = t_f - 5 * eps
        exact = math.exp((t - t_f) / eps)
        assert abs(traj(t)[0, 0] - exact) / exact <= 1e-6

    def test_symmetrize(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((3, 3))
        Y0 = np.eye(3)

        def rhs(t, Y):
            return A @ Y + Y @ A.T  # preserves symmetry exactly

        cfg = IntegratorConfig(symmetrize=True)
        traj = integrate_terminal(rhs, Y0, 1.0, cfg)
        for t in (0.0, 0.5, 1.0):
            V = traj(t)
            assert np.allclose(V, V.T, atol=1e-14)

    def test_blowup_detected(self):
        # dy/dt = y^2 from y(0) = 1 escapes at t = 1
        rhs = scalar_rhs(lambda t, y: y * y)
        with pytest.raises(BlowupError) as exc:
            integrate_initial(rhs, [[1.0]], 0.0, 2.0)
        assert abs(exc.value.t_escape - 1.0) < 0.05

    def test_max_steps(self):
        cfg = IntegratorConfig(max_steps=5)
        with pytest.raises(MaxStepsError):
            integrate_terminal(scalar_rhs(lambda t, y: -y), [[1.0]], 10.0, cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig(rtol=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(h_init=1e-20, h_min=1e-13)


class TestRK4:
    def test_fourth_order_convergence(self):
        # halving the step shrinks the error by ~16; accept [12, 20]
        rhs = scalar_rhs(lambda t, y: math.cos(t) * y)

        def err(h):
            cfg = IntegratorConfig(method="rk4", h_init=h)
            traj = integrate_initial(rhs, [[1.0]], 0.0, 2.0, cfg)
            return abs(traj(2.0)[0, 0] - math.exp(math.sin(2.0)))

        ratio = err(0.02) / err(0.01)
        assert 12.0 <= ratio <= 20.0, f"order ratio {ratio}"
