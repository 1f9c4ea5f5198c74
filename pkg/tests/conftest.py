import numpy as np
import pytest

from cheapgame.asymptotic import build_asymptotic_solution
from cheapgame.evaluation import solve_L, solve_M, solve_N
from cheapgame.exact import solve_exact
from cheapgame.example import REFERENCE_EPS, pursuit_evasion_spec
from cheapgame.model import GameSpec
from cheapgame.ode import IntegratorConfig


@pytest.fixture(scope="session")
def spec():
    return pursuit_evasion_spec()


@pytest.fixture(scope="session")
def cfg():
    return IntegratorConfig()


@pytest.fixture(scope="session")
def asym(spec, cfg):
    return build_asymptotic_solution(spec, cfg)


@pytest.fixture(scope="session")
def exact_solutions(spec, cfg):
    return {eps: solve_exact(spec.with_epsilon(eps), cfg) for eps in REFERENCE_EPS}


@pytest.fixture(scope="session")
def lmn_solutions(spec, asym, cfg):
    out = {}
    for eps in REFERENCE_EPS:
        sp = spec.with_epsilon(eps)
        out[eps] = (solve_L(sp, asym, cfg), solve_M(sp, asym, cfg), solve_N(sp, asym, cfg))
    return out


def random_spec(rng, time_varying=False) -> GameSpec:
    """A random well-posed game: weak maximizer, PSD weights, zero slow-to-fast2 coupling."""
    n = int(rng.integers(1, 4))
    m = int(rng.integers(2, 5))
    m1 = int(rng.integers(1, m))
    l = int(rng.integers(1, 3))
    A2 = np.hstack([rng.standard_normal((n, m1)), np.zeros((n, m - m1))])
    W = rng.standard_normal((n, n))
    Wg = rng.standard_normal((l, l))
    Wf = rng.standard_normal((n, n))
    lam = np.zeros((1, m))
    lam[0, :m1] = rng.uniform(0.5, 3.0, m1)
    if time_varying:
        lam = np.stack([lam, np.abs(0.3 * rng.standard_normal((1, m))) * (lam > 0)])
        A1 = np.stack([0.5 * rng.standard_normal((n, n)), 0.2 * rng.standard_normal((n, n))])
    else:
        A1 = 0.5 * rng.standard_normal((n, n))
    return GameSpec(
        n=n,
        m=m,
        l=l,
        m1=m1,
        t_f=1.0,
        epsilon=0.1,
        A1=A1,
        A2=A2,
        A3=0.5 * rng.standard_normal((m, n)),
        A4=0.5 * rng.standard_normal((m, m)),
        C1=0.1 * rng.standard_normal((n, l)),
        C2=0.1 * rng.standard_normal((m, l)),
        D1=W @ W.T / n + 0.1 * np.eye(n),
        lam=lam,
        G=Wg @ Wg.T / l + np.eye(l),
        F1=Wf @ Wf.T / n,
        x0=rng.standard_normal(n),
        y0=rng.standard_normal(m),
    )
