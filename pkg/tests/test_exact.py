from dataclasses import replace

import numpy as np
import pytest

from cheapgame.example import REFERENCE_EPS, REFERENCE_J_STAR
from cheapgame.exact import extract_blocks, riccati_rhs, solve_exact
from cheapgame.model import PolyMatrix
from cheapgame.ode import BlowupError, IntegratorConfig


class TestSolveExact:
    def test_reference_values(self, exact_solutions):
        for eps in REFERENCE_EPS:
            assert abs(exact_solutions[eps].value - REFERENCE_J_STAR[eps]) <= 1e-3

    def test_terminal_condition(self, spec, exact_solutions):
        F = spec.F_full()
        for sol in exact_solutions.values():
            assert np.allclose(sol.K(spec.t_f), F, atol=1e-12)

    def test_symmetry(self, exact_solutions):
        sol = exact_solutions[0.1]
        for t in np.linspace(0.0, 1.5, 16):
            K = sol.K(t)
            assert np.allclose(K, K.T, atol=1e-10)

    def test_rejects_nonpositive_epsilon(self, spec):
        with pytest.raises(ValueError, match="epsilon must be positive"):
            solve_exact(spec.with_epsilon(0.0))

    def test_blowup_names_assumption(self, spec):
        strong_max = replace(spec, G=PolyMatrix.constant([[2.5, 0.0], [0.0, 2.0]]))
        with pytest.raises(BlowupError, match="assumption A1"):
            solve_exact(strong_max)

    def test_generic_path_agrees_with_kernel(self, spec, exact_solutions, monkeypatch):
        import cheapgame.exact as exact_mod

        monkeypatch.setattr(exact_mod.kernels, "backend", lambda: "numpy")
        sol = solve_exact(spec)
        ref = exact_solutions[0.1]
        for t in np.linspace(0.0, 1.5, 16):
            assert np.allclose(sol.K(t), ref.K(t), atol=1e-6)

    def test_rk4_method(self, spec):
        cfg = IntegratorConfig(method="rk4", h_init=2e-3)
        sol = solve_exact(spec, cfg)
        assert abs(sol.value - REFERENCE_J_STAR[0.1]) <= 1e-3


class TestResidual:
    def test_midpoint_residual(self, spec):
        # self-consistency of the dense output between accepted steps
        cfg = IntegratorConfig(rtol=1e-11, atol=1e-13, dense_points=1001)
        for eps in REFERENCE_EPS:
            sp = spec.with_epsilon(eps)
            sol = solve_exact(sp, cfg)
            rhs = riccati_rhs(sp)
            g = sol.K.grid
            worst = 0.0
            for a, b in zip(g[:-1], g[1:]):
                tm = 0.5 * (a + b)
                r = sol.K.derivative(tm) - rhs(tm, sol.K(tm))
                worst = max(worst, float(np.max(np.abs(r))))
            assert worst <= 1e-6, f"eps={eps}: residual {worst:.3e}"


class TestBlocks:
    def test_reassembly(self, spec, exact_solutions):
        for eps, sol in exact_solutions.items():
            blocks = extract_blocks(sol)
            for t in (0.0, 0.75, 1.5):
                K = sol.K(t)
                n, m1 = spec.n, spec.m1
                assert np.allclose(blocks[1](t), K[:n, :n], atol=1e-12)
                assert np.allclose(eps * blocks[2](t), K[:n, n:n + m1], atol=1e-12)
                assert np.allclose(eps * blocks[4](t), K[n:n + m1, n:n + m1], atol=1e-12)
                assert np.allclose(eps**2 * blocks[6](t), K[n + m1:, n + m1:], atol=1e-12)

    def test_scaled_blocks_order_one(self, exact_solutions):
        # the eps-scalings are the natural magnitudes: scaled blocks stay O(1)
        for sol in exact_solutions.values():
            blocks = extract_blocks(sol)
            for alpha in range(1, 7):
                peak = float(np.max(np.abs(blocks[alpha].values)))
                assert peak < 50.0, f"block {alpha} peak {peak}"
