"""Built-in pursuit-evasion example.

Planar engagement between a pursuer (minimizer, lateral acceleration
commands) and an evader (maximizer, lateral acceleration and velocity).
State: lateral separation x, relative lateral velocity y1, pursuer main
lateral acceleration y2. Closed-form outer solutions are known for this
problem and serve as golden oracles in the test-suite.
"""

from __future__ import annotations

import math

from cheapgame.model import GameSpec


def pursuit_evasion_spec(epsilon: float = 0.1) -> GameSpec:
    return GameSpec(
        n=1,
        m=2,
        l=2,
        m1=1,
        t_f=1.5,
        epsilon=epsilon,
        A1=[[0.0]],
        A2=[[1.0, 0.0]],
        A3=[[0.0], [0.0]],
        A4=[[0.0, 1.0], [0.0, -1.0]],
        C1=[[1.0, 0.0]],
        C2=[[0.0, 1.0], [0.0, 0.0]],
        D1=[[6.4]],
        lam=[[10.0, 0.0]],
        G=[[5.0, 0.0], [0.0, 4.0]],
        F1=[[0.5]],
        x0=[0.0],
        y0=[2.0, 1.0],
    )


def outer_K1_closed_form(t: float) -> float:
    """Slow outer Riccati block: 8 tan(arctan(1/16) + 1.2 - 0.8 t)."""
    return 8.0 * math.tan(math.atan(1.0 / 16.0) + 1.2 - 0.8 * t)


def outer_K6_closed_form(t: float) -> float:
    """Zero-weight fast outer block: g tanh(g (t - 1.5)) / (g tanh(g (t - 1.5)) - 2), g = sqrt(2)."""
    g = math.sqrt(2.0)
    th = g * math.tanh(g * (t - 1.5))
    return th / (th - 2.0)


# 4-decimal reference values for epsilon = 0.2, 0.1, 0.05, used by the
# golden checks and the regression tests. J_EPS0 (the realized cost of the
# approximate feedback pair) is cross-validated against closed-loop
# simulation of that pair, which pins it between J_V and J_U.
REFERENCE_EPS = (0.2, 0.1, 0.05)
REFERENCE_J_STAR = {0.2: 3.1892, 0.1: 1.4184, 0.05: 0.6696}
REFERENCE_J_EPS0 = {0.2: 3.2205, 0.1: 1.4225, 0.05: 0.6702}
REFERENCE_J_U = {0.2: 3.2401, 0.1: 1.4234, 0.05: 0.6702}
REFERENCE_J_V = {0.2: 3.1755, 0.1: 1.4176, 0.05: 0.6696}
REFERENCE_DELTA_U = {0.2: 0.051, 0.1: 0.005, 0.05: 5.57e-4}
REFERENCE_DELTA_V = {0.2: 0.0137, 0.1: 7.89e-4, 0.05: 4.73e-5}


def beta() -> float:
    return math.sqrt(10.0)


def gamma() -> float:
    return math.sqrt(2.0)
