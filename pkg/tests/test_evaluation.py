import os

import numpy as np

from cheapgame.evaluation import (
    convergence_sweep,
    psi_weight,
    psi_weight_v,
    solve_L,
    solve_M,
    solve_N,
    trajectory_error,
    value_report,
    write_error_tables,
)
from cheapgame.example import (
    REFERENCE_DELTA_U,
    REFERENCE_DELTA_V,
    REFERENCE_EPS,
    REFERENCE_J_EPS0,
    REFERENCE_J_U,
    REFERENCE_J_V,
)


def make_report(spec, eps, exact_solutions, lmn_solutions):
    L, M, N = lmn_solutions[eps]
    return value_report(spec.with_epsilon(eps), exact_solutions[eps], L, M, N)


class TestValues:
    def test_reference_tables(self, spec, exact_solutions, lmn_solutions):
        for eps in REFERENCE_EPS:
            r = make_report(spec, eps, exact_solutions, lmn_solutions)
            assert abs(r.J_eps0 - REFERENCE_J_EPS0[eps]) <= 1e-3
            assert abs(r.J_u_eps0 - REFERENCE_J_U[eps]) <= 1e-3
            assert abs(r.J_v_eps0 - REFERENCE_J_V[eps]) <= 1e-3

    def test_guaranteed_deltas(self, spec, exact_solutions, lmn_solutions):
        for eps in REFERENCE_EPS:
            r = make_report(spec, eps, exact_solutions, lmn_solutions)
            assert abs(r.abs_err_u - REFERENCE_DELTA_U[eps]) <= 0.2 * REFERENCE_DELTA_U[eps]
            assert abs(r.abs_err_v - REFERENCE_DELTA_V[eps]) <= 0.2 * REFERENCE_DELTA_V[eps]

    def test_ordering(self, spec, exact_solutions, lmn_solutions):
        # N <= L <= M at the initial state, and the value sits inside [N, M]
        for eps in REFERENCE_EPS:
            r = make_report(spec, eps, exact_solutions, lmn_solutions)
            assert r.J_v_eps0 <= r.J_eps0 <= r.J_u_eps0
            assert r.J_v_eps0 <= r.J_star <= r.J_u_eps0

    def test_rel_err_and_cfit(self, spec, exact_solutions, lmn_solutions):
        r = make_report(spec, 0.1, exact_solutions, lmn_solutions)
        assert np.isclose(r.rel_err_percent(), 100.0 * r.abs_err / r.J_star)
        assert np.isclose(r.c_fit(), r.abs_err / (0.01 * r.psi))


class TestSubstitution:
    def test_exact_K_is_fixed_point(self, spec, exact_solutions, cfg):
        # with k0 = exact K, all three problems collapse to the exact Riccati solution
        sol = exact_solutions[0.1]
        k0 = lambda t: sol.K(t)
        for solver in (solve_L, solve_M, solve_N):
            out = solver(spec, k0=k0, cfg=cfg)
            worst = max(
                float(np.max(np.abs(out(t) - sol.K(t)))) for t in np.linspace(0.0, 1.5, 31)
            )
            assert worst <= 1e-7, f"{solver.__name__}: {worst:.3e}"


class TestPsi:
    def test_example_weights(self, spec):
        # z0 = (0, 2, 1): psi = 4 eps + 5 eps^2, psi_v = 9 eps^2
        for eps in (0.2, 0.1, 0.05):
            assert np.isclose(psi_weight(spec, eps), 4 * eps + 5 * eps**2)
            assert np.isclose(psi_weight_v(spec, eps), 9 * eps**2)

    def test_slow_state_dominates(self, spec):
        from dataclasses import replace

        sp = replace(spec, x0=np.array([3.0]), y0=np.zeros(2))
        assert np.isclose(psi_weight(sp, 0.1), 9.0)
        assert np.isclose(psi_weight_v(sp, 0.1), 9.0)


class TestSweep:
    def test_full_sweep(self, spec, cfg, asym, tmp_path):
        sweep = convergence_sweep(spec, [0.2, 0.1, 0.05], cfg, asym=asym)
        assert not sweep.failures
        assert [r.epsilon for r in sweep.reports] == [0.2, 0.1, 0.05]
        assert not sweep.non_monotone()
        errs = [sweep.trajectory_errors[e] for e in (0.2, 0.1, 0.05)]
        assert errs[0] > errs[1] > errs[2]
        paths = write_error_tables(sweep, tmp_path)
        assert len(paths) == 3
        for p in paths:
            lines = open(p).read().strip().splitlines()
            assert lines[0] == "epsilon,J_star,J_approx,abs_err,rel_err_percent"
            assert len(lines) == 4
        assert os.path.basename(paths[0]) == "table_value_approx.csv"

    def test_failures_recorded(self, spec, cfg, asym):
        sweep = convergence_sweep(spec, [0.1, -1.0], cfg, asym=asym, with_trajectory_error=False)
        assert len(sweep.reports) == 1
        assert "positive" in sweep.failures[-1.0]

    def test_duplicates_warn(self, spec, cfg, asym):
        sweep = convergence_sweep(spec, [0.1, 0.1], cfg, asym=asym, with_trajectory_error=False)
        assert any("dedup" in w for w in sweep.warnings)

    def test_trajectory_error_positive(self, exact_solutions, asym):
        assert trajectory_error(exact_solutions[0.1], asym) > 0.0
