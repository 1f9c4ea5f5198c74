"""Command-line interface.

Subcommands: validate, solve-exact, solve-asymptotic, evaluate, sweep,
simulate, example. Game data comes from a TOML file (see load_spec for the
schema) or, for the example command, from the built-in pursuit-evasion
problem. Human-readable summaries go to stdout; CSV/SVG artifacts go to
the output directory.

Exit codes: 0 success, 1 validation failure, 2 solver failure (a standing
assumption fails), 3 golden-check failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from cheapgame.asymptotic import (
    AssumptionViolation,
    build_asymptotic_solution,
    solve_reduced_game,
)
from cheapgame.evaluation import (
    convergence_sweep,
    solve_L,
    solve_M,
    solve_N,
    value_report,
    write_error_tables,
)
from cheapgame.exact import exact_feedback, solve_exact
from cheapgame.kernels import backend
from cheapgame.model import GameSpec, PolyMatrix, partition, validate_spec
from cheapgame.ode import BlowupError, IntegratorConfig, MaxStepsError
from cheapgame.simulate import control_histories, export_csv, simulate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_GOLDEN = 3


def _poly_or_const(value, name):
    """A matrix entry is either a nested list (constant) or {poly = [M0, M1, ...]}."""
    if isinstance(value, dict):
        if set(value) != {"poly"}:
            raise ValueError(f"{name}: expected a matrix or a table with the single key 'poly'")
        return PolyMatrix(np.array(value["poly"], dtype=float))
    return PolyMatrix.constant(np.atleast_2d(np.asarray(value, dtype=float)))


def load_spec(path) -> tuple[GameSpec, list[float]]:
    """Load a game spec from TOML.

    Sections: [dimensions] n, m, l, m1; [dynamics] t_f plus A1, A2, A3, A4,
    C1, C2; [cost] D1, lam (row vector of fast-state weights), G, F1;
    [initial] x0, y0, epsilon. Matrices are nested row-major arrays;
    time-varying entries use {poly = [M0, M1, ...]} lowest degree first.
    epsilon may be a list, in which case the first entry seeds the spec and
    the full list is returned for sweeps.
    """
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    for section in ("dimensions", "dynamics", "cost", "initial"):
        if section not in data:
            raise ValueError(f"missing [{section}] section in {path}")
    dims = data["dimensions"]
    dyn = data["dynamics"]
    cost = data["cost"]
    init = data["initial"]
    eps_raw = init.get("epsilon", 0.1)
    eps_list = [float(e) for e in (eps_raw if isinstance(eps_raw, list) else [eps_raw])]
    if not eps_list:
        raise ValueError("epsilon list must be nonempty")
    spec = GameSpec(
        n=int(dims["n"]),
        m=int(dims["m"]),
        l=int(dims["l"]),
        m1=int(dims["m1"]),
        t_f=float(dyn["t_f"]),
        epsilon=eps_list[0],
        A1=_poly_or_const(dyn["A1"], "A1"),
        A2=_poly_or_const(dyn["A2"], "A2"),
        A3=_poly_or_const(dyn["A3"], "A3"),
        A4=_poly_or_const(dyn["A4"], "A4"),
        C1=_poly_or_const(dyn["C1"], "C1"),
        C2=_poly_or_const(dyn["C2"], "C2"),
        D1=_poly_or_const(cost["D1"], "D1"),
        lam=_poly_or_const(cost["lam"], "lam"),
        G=_poly_or_const(cost["G"], "G"),
        F1=np.atleast_2d(np.asarray(cost["F1"], dtype=float)),
        x0=np.asarray(init["x0"], dtype=float),
        y0=np.asarray(init["y0"], dtype=float),
    )
    return spec, eps_list


def write_svg(path, title, series, xlabel="t", width=640, height=420):
    """Minimal static line plot: series is a list of (label, xs, ys)."""
    pad = 54
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = float(ys_all.min()), float(ys_all.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    sx = (width - 2 * pad) / (x1 - x0)
    sy = (height - 2 * pad) / (y1 - y0)
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 14}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x0:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="end" font-size="10">{x1:.3g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" font-size="10">{y0:.3g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" font-size="10">{y1:.3g}</text>',
    ]
    for i, (label, xs, ys) in enumerate(series):
        pts = " ".join(
            f"{pad + (float(x) - x0) * sx:.2f},{height - pad - (float(y) - y0) * sy:.2f}"
            for x, y in zip(xs, ys)
        )
        color = colors[i % len(colors)]
        lines.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        lines.append(
            f'<text x="{width - pad + 4}" y="{pad + 16 * i + 10}" font-size="11" fill="{color}">{label}</text>'
        )
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


def _cfg_from_args(args) -> IntegratorConfig:
    return IntegratorConfig(method=args.method, rtol=args.rtol, atol=args.atol)


def _ensure_out(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _validate_or_fail(spec: GameSpec) -> int | None:
    rep = validate_spec(spec)
    print(rep.summary())
    if not rep.ok:
        return EXIT_VALIDATION
    return None


def cmd_validate(args) -> int:
    spec, _ = load_spec(args.spec)
    rep = validate_spec(spec)
    part = partition(spec)
    print("A2 satisfied" if part.assumption_A2_satisfied else "A2 VIOLATED", end="; ")
    print(rep.summary())
    return EXIT_OK if rep.ok and part.assumption_A2_satisfied else EXIT_VALIDATION


def cmd_solve_exact(args) -> int:
    spec, eps_list = load_spec(args.spec)
    code = _validate_or_fail(spec)
    if code is not None:
        return code
    out = _ensure_out(args)
    cfg = _cfg_from_args(args)
    for eps in args.eps or eps_list:
        sol = solve_exact(spec.with_epsilon(eps), cfg)
        print(f"epsilon = {eps:g}: game value J* = {sol.value:.6f} ({len(sol.K.grid)} grid points)")
        ts = sol.K.grid
        flat = sol.K.values.reshape(len(ts), -1)
        np.savetxt(
            os.path.join(out, f"K_exact_eps{eps:g}.csv"),
            np.column_stack([ts, flat]),
            delimiter=",",
            header="t," + ",".join(f"K_{i + 1}{j + 1}" for i in range(spec.N) for j in range(spec.N)),
            comments="",
        )
    return EXIT_OK


def cmd_solve_asymptotic(args) -> int:
    spec, _ = load_spec(args.spec)
    code = _validate_or_fail(spec)
    if code is not None:
        return code
    out = _ensure_out(args)
    cfg = _cfg_from_args(args)
    asym = build_asymptotic_solution(spec, cfg)
    print(f"beta = {asym.beta:.6f}, beta_bar = {asym.beta_bar:.6f}")
    red = solve_reduced_game(asym.part, spec, cfg)
    print(f"reduced game value x0' K1o(0) x0 = {red.value:.6f}")
    ts = np.linspace(0.0, spec.t_f, 401)
    rows = []
    for t in ts:
        rows.append(
            np.concatenate(
                [[t], asym.K1o(t).ravel(), asym.K2o(t).ravel(), asym.K4o(t).ravel(), asym.K6o(t).ravel()]
            )
        )
    np.savetxt(
        os.path.join(out, "K_outer.csv"),
        np.array(rows),
        delimiter=",",
        header="t,K1o...,K2o...,K4o...,K6o...",
        comments="",
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    spec, eps_list = load_spec(args.spec)
    code = _validate_or_fail(spec)
    if code is not None:
        return code
    cfg = _cfg_from_args(args)
    asym = build_asymptotic_solution(spec, cfg)
    for eps in args.eps or eps_list:
        sp = spec.with_epsilon(eps)
        sol = solve_exact(sp, cfg)
        rep = value_report(sp, sol, solve_L(sp, asym, cfg), solve_M(sp, asym, cfg), solve_N(sp, asym, cfg))
        print(
            f"epsilon = {eps:g}: J* = {rep.J_star:.6f}, J_eps0 = {rep.J_eps0:.6f}, "
            f"J_u = {rep.J_u_eps0:.6f}, J_v = {rep.J_v_eps0:.6f}, "
            f"abs_err = {rep.abs_err:.3e}, C_fit = {rep.c_fit():.4g}"
        )
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec, eps_list = load_spec(args.spec)
    code = _validate_or_fail(spec)
    if code is not None:
        return code
    eps = args.eps or eps_list
    if not eps:
        print("sweep needs a nonempty epsilon list", file=sys.stderr)
        return EXIT_VALIDATION
    out = _ensure_out(args)
    cfg = _cfg_from_args(args)
    sweep = convergence_sweep(spec, eps, cfg)
    for r in sweep.reports:
        print(
            f"epsilon = {r.epsilon:g}: J* = {r.J_star:.6f}, J_eps0 = {r.J_eps0:.6f}, "
            f"J_u = {r.J_u_eps0:.6f}, J_v = {r.J_v_eps0:.6f}, E = {sweep.trajectory_errors.get(r.epsilon, float('nan')):.4g}"
        )
    for e, msg in sweep.failures.items():
        print(f"epsilon = {e:g}: FAILED ({msg})")
    for w in sweep.warnings:
        print(f"warning: {w}")
    paths = write_error_tables(sweep, out)
    print("wrote " + ", ".join(paths))
    if sweep.failures:
        return EXIT_SOLVER
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec, _ = load_spec(args.spec)
    code = _validate_or_fail(spec)
    if code is not None:
        return code
    out = _ensure_out(args)
    cfg = _cfg_from_args(args)
    eps = args.eps[0] if args.eps else spec.epsilon
    sp = spec.with_epsilon(eps)
    if args.law == "exact":
        law = exact_feedback(solve_exact(sp, cfg))
    else:
        law = build_asymptotic_solution(sp, cfg).approximate_feedback(eps)
    rec = simulate(sp, law, cfg)
    path = os.path.join(out, f"trajectory_{law.label}_eps{eps:g}.csv")
    export_csv(rec, path)
    print(f"total cost J({law.label}) = {rec.total_cost:.6f}; wrote {path}")
    return EXIT_OK


def run_example(out: str, cfg: IntegratorConfig | None = None, seed: int = 0) -> int:
    """End-to-end reproduction of the built-in pursuit-evasion study.

    Writes the three error tables for epsilon in {0.2, 0.1, 0.05},
    trajectory and control CSVs for the exact and asymptotic laws, a
    closed-form comparison report for the outer blocks, and SVG time
    histories of the layer-sensitive control channels. Returns 0 iff all
    golden checks pass. seed is recorded for reproducibility; the example
    itself is deterministic.
    """
    from cheapgame.example import (
        REFERENCE_EPS,
        REFERENCE_J_EPS0,
        REFERENCE_J_STAR,
        REFERENCE_J_U,
        REFERENCE_J_V,
        outer_K1_closed_form,
        outer_K6_closed_form,
        pursuit_evasion_spec,
    )

    cfg = cfg or IntegratorConfig()
    os.makedirs(out, exist_ok=True)
    print(f"backend: {backend()}; seed: {seed}")
    spec = pursuit_evasion_spec()
    rep = validate_spec(spec)
    if not rep.ok:
        print(rep.summary())
        return EXIT_VALIDATION
    asym = build_asymptotic_solution(spec, cfg)

    checks: list[tuple[str, bool, str]] = []

    # closed-form comparison report for the outer blocks
    ts = np.linspace(0.0, spec.t_f, 401)
    k1_num = np.array([float(asym.K1o(t)[0, 0]) for t in ts])
    k1_ref = np.array([outer_K1_closed_form(t) for t in ts])
    k6_num = np.array([float(asym.K6o(t)[0, 0]) for t in ts])
    k6_ref = np.array([outer_K6_closed_form(t) for t in ts])
    e1 = float(np.max(np.abs(k1_num - k1_ref)))
    e6 = float(np.max(np.abs(k6_num - k6_ref)))
    np.savetxt(
        os.path.join(out, "outer_closed_form_comparison.csv"),
        np.column_stack([ts, k1_num, k1_ref, k6_num, k6_ref]),
        delimiter=",",
        header="t,K1o_numeric,K1o_closed_form,K6o_numeric,K6o_closed_form",
        comments="",
    )
    checks.append(("K1o matches closed form (max err <= 1e-7)", e1 <= 1e-7, f"max err {e1:.3e}"))
    checks.append(("K6o matches closed form (max err <= 1e-7)", e6 <= 1e-7, f"max err {e6:.3e}"))
    checks.append(("K6o(t_f) = 0", abs(float(asym.K6o(spec.t_f)[0, 0])) <= 1e-12, f"{float(asym.K6o(spec.t_f)[0, 0]):.3e}"))

    sweep = convergence_sweep(spec, list(REFERENCE_EPS), cfg, asym=asym)
    write_error_tables(sweep, out)
    for r in sweep.reports:
        e = r.epsilon
        checks.append(
            (f"J* at eps={e:g} within 1e-3 of {REFERENCE_J_STAR[e]}", abs(r.J_star - REFERENCE_J_STAR[e]) <= 1e-3, f"{r.J_star:.6f}")
        )
        checks.append(
            (f"J_eps0 at eps={e:g} within 1e-3 of {REFERENCE_J_EPS0[e]}", abs(r.J_eps0 - REFERENCE_J_EPS0[e]) <= 1e-3, f"{r.J_eps0:.6f}")
        )
        checks.append(
            (f"J_u at eps={e:g} within 1e-3 of {REFERENCE_J_U[e]}", abs(r.J_u_eps0 - REFERENCE_J_U[e]) <= 1e-3, f"{r.J_u_eps0:.6f}")
        )
        checks.append(
            (f"J_v at eps={e:g} within 1e-3 of {REFERENCE_J_V[e]}", abs(r.J_v_eps0 - REFERENCE_J_V[e]) <= 1e-3, f"{r.J_v_eps0:.6f}")
        )
        checks.append(
            (f"bracketing J_v <= J* <= J_u at eps={e:g}", r.J_v_eps0 <= r.J_star + 1e-10 and r.J_star <= r.J_u_eps0 + 1e-10, "")
        )

    # trajectory/control CSVs for both laws, plus the layer-channel figures
    u1_series, v2_series = [], []
    for eps in REFERENCE_EPS:
        sp = spec.with_epsilon(eps)
        rec_ex = simulate(sp, exact_feedback(solve_exact(sp, cfg)), cfg)
        export_csv(rec_ex, os.path.join(out, f"trajectory_exact_eps{eps:g}.csv"))
        rec_as = simulate(sp, asym.approximate_feedback(eps), cfg)
        export_csv(rec_as, os.path.join(out, f"trajectory_asymptotic_eps{eps:g}.csv"))
        ch = control_histories(rec_as)
        u1_series.append((f"eps={eps:g}", ch.grid, ch.u[:, 0]))
        v2_series.append((f"eps={eps:g}", ch.grid, ch.v[:, 1]))
    write_svg(os.path.join(out, "fig_u01.svg"), "u_01(t, eps) under the asymptotic law", u1_series)
    write_svg(os.path.join(out, "fig_v02.svg"), "v_02(t, eps) under the asymptotic law", v2_series)

    failed = [c for c in checks if not c[1]]
    for name, ok, detail in checks:
        print(f"[{'ok' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
    if failed:
        print(f"{len(failed)} golden check(s) failed; first failure: {failed[0][0]}")
        return EXIT_GOLDEN
    print(f"all {len(checks)} golden checks pass; artifacts in {out}")
    return EXIT_OK


def cmd_example(args) -> int:
    return run_example(_ensure_out(args), _cfg_from_args(args), seed=args.seed)


def _parse_eps(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cheapgame", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    commands = {
        "validate": cmd_validate,
        "solve-exact": cmd_solve_exact,
        "solve-asymptotic": cmd_solve_asymptotic,
        "evaluate": cmd_evaluate,
        "sweep": cmd_sweep,
        "simulate": cmd_simulate,
        "example": cmd_example,
    }
    for name, fn in commands.items():
        sp = sub.add_parser(name)
        if name != "example":
            sp.add_argument("--spec", required=True, help="TOML game spec")
        sp.add_argument("--eps", type=_parse_eps, default=None, help="epsilon values, comma or space separated")
        sp.add_argument("--out", default=None, help="output directory for artifacts")
        sp.add_argument("--rtol", type=float, default=1e-8)
        sp.add_argument("--atol", type=float, default=1e-10)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--method", choices=("rk45", "rk4"), default="rk45")
        if name == "simulate":
            sp.add_argument("--law", choices=("exact", "asymptotic"), default="exact")
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (BlowupError, MaxStepsError, AssumptionViolation) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
