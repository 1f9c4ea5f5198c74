import numpy as np
import pytest

from cheapgame.exact import exact_feedback
from cheapgame.example import REFERENCE_EPS
from cheapgame.simulate import FeedbackLaw, control_histories, export_csv, simulate


class TestCostReconstruction:
    def test_exact_law_reproduces_value(self, spec, exact_solutions, cfg):
        for eps in REFERENCE_EPS:
            sp = spec.with_epsilon(eps)
            sol = exact_solutions[eps]
            rec = simulate(sp, exact_feedback(sol), cfg)
            assert abs(rec.total_cost - sol.value) <= 2e-3

    def test_asymptotic_law_matches_L(self, spec, asym, lmn_solutions, cfg):
        for eps in REFERENCE_EPS:
            sp = spec.with_epsilon(eps)
            L = lmn_solutions[eps][0]
            expected = float(sp.z0 @ L(0.0) @ sp.z0)
            rec = simulate(sp, asym.approximate_feedback(eps), cfg)
            assert abs(rec.total_cost - expected) <= 2e-3

    def test_quadrature_cross_check(self, spec, asym, cfg):
        # trapezoid over the sampled integrand vs the ODE-accumulated cost
        rec = simulate(spec, asym.approximate_feedback(0.1), cfg)
        assert abs(rec.trapezoid_cost() - rec.total_cost) / abs(rec.total_cost) <= 1e-2

    def test_zero_law(self, spec, cfg):
        rec = simulate(spec, None, cfg)
        assert rec.label == "zero"
        assert np.all(rec.controls_u == 0.0)
        assert np.all(rec.controls_v == 0.0)


class TestMechanics:
    def test_determinism(self, spec, asym, cfg):
        a = simulate(spec, asym.approximate_feedback(0.1), cfg)
        b = simulate(spec, asym.approximate_feedback(0.1), cfg)
        assert np.array_equal(a.grid, b.grid)
        assert np.array_equal(a.states, b.states)
        assert a.total_cost == b.total_cost

    def test_gain_shape_validation(self, spec, cfg):
        bad = FeedbackLaw(lambda t: np.zeros((1, 3)), lambda t: np.zeros((2, 3)))
        with pytest.raises(ValueError, match="minimizer gain shape"):
            simulate(spec, bad, cfg)

    def test_initial_state(self, spec, asym, cfg):
        rec = simulate(spec, asym.approximate_feedback(0.1), cfg)
        assert np.allclose(rec.states[0], spec.z0)
        assert rec.grid[0] == 0.0 and np.isclose(rec.grid[-1], spec.t_f)

    def test_layer_refinement(self, spec, asym, cfg):
        # output grid near t_f is at least eps/5 fine so layer controls show up
        rec = simulate(spec, asym.approximate_feedback(0.1), cfg)
        tail = rec.grid[rec.grid >= spec.t_f - 10 * spec.epsilon]
        assert np.max(np.diff(tail)) <= spec.epsilon / 5.0 + 1e-12


class TestHistories:
    def test_peaks(self, spec, asym, cfg):
        rec = simulate(spec, asym.approximate_feedback(0.1), cfg)
        ch = control_histories(rec)
        names = {p.channel for p in ch.peaks}
        assert names == {"u1", "u2", "v1", "v2"}
        p = ch.peak("u1")
        assert p.peak == float(np.max(np.abs(rec.controls_u[:, 0])))
        with pytest.raises(KeyError):
            ch.peak("u9")

    def test_export_csv(self, spec, asym, cfg, tmp_path):
        rec = simulate(spec, asym.approximate_feedback(0.1), cfg)
        path = tmp_path / "traj.csv"
        export_csv(rec, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,z_1,z_2,z_3,u_1,u_2,v_1,v_2,running_cost"
        assert len(lines) == len(rec.grid) + 1
