"""Shared oracles and fixtures.

Oracles here are independent of the package: ``math.gamma`` for Gamma
ratios, ``scipy.special.erfcx`` for the half-order Mittag-Leffler function
(``E_{1/2}(z) = exp(z^2) erfc(-z) = erfcx(-z)``) and a plain mpmath series.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from scipy.special import erfcx


def ml_half(z):
    """Half-order Mittag-Leffler function through the scaled complementary error function."""
    return erfcx(-np.asarray(z, dtype=float))


def ml_series(alpha: float, z: float, terms: int = 200, dps: int = 60) -> float:
    """Mittag-Leffler series summed term by term in extended precision."""
    with mpmath.workdps(dps):
        a, zz = mpmath.mpf(alpha), mpmath.mpf(z)
        return float(mpmath.fsum(zz**k / mpmath.gamma(a * k + 1) for k in range(terms)))


def rl_power(beta: float, alpha: float, t):
    """Closed form of the fractional integral of ``t**beta``."""
    return math.gamma(beta + 1) / math.gamma(beta + alpha + 1) * np.asarray(t, dtype=float) ** (beta + alpha)


def caputo_power(beta: float, alpha: float, t):
    """Closed form of the Caputo derivative of ``t**beta`` for ``beta > 0``."""
    return math.gamma(beta + 1) / math.gamma(beta + 1 - alpha) * np.asarray(t, dtype=float) ** (beta - alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def example_system_trajectory(seed: int, n_steps: int = 2048, horizon: float = 5.0, cell: float = 0.05):
    """Solver output for the built-in two-dimensional example under random controls.

    Control and disturbance are drawn uniformly from the unit ball and held
    on cells of width ``cell``; the result starts at ``(-1, 0)``.
    """
    from fracguide import CauchyProblem, RhsFunction, TimeGrid, solve_euler
    from fracguide.game_model import ActionSet
    from fracguide.scenarios import scenario_paper_example

    cfg = scenario_paper_example()
    dyn = cfg.dyn
    gen = np.random.default_rng(seed)
    n_cells = int(round(horizon / cell))
    ball = ActionSet.ball(1.0, 2)
    us, vs = ball.sample(gen, n_cells), ball.sample(gen, n_cells)

    def f(t, x):
        j = min(int(t / cell), n_cells - 1)
        return dyn(t, x, us[j], vs[j])

    prob = CauchyProblem(RhsFunction(f, dim=2, c_f=dyn.c_g), cfg.alpha, cfg.x0, horizon)
    return solve_euler(prob, TimeGrid.uniform(horizon, n_steps))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
