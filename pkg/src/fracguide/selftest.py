"""Analytic-oracle battery behind ``fracguide selftest``.

Every check compares the library against an independent closed form
(``math.gamma``, ``math.erfc``, power rules) and returns ``(name, ok, detail)``.
"""

from __future__ import annotations

import math
from typing import Callable, Iterator

import numpy as np

from .fde_solver import CauchyProblem, RhsFunction, solve_euler
from .frac_core import (
    GridFunction,
    TimeGrid,
    caputo_derivative_l1,
    gamma_fn,
    mittag_leffler,
    power_rule_caputo,
    power_rule_integral,
    rl_integral,
)
from .game_model import ActionSet, GameDynamics, check_saddle
from .lyapunov_check import check_quadratic_inequality


def _ml_half(z: float) -> float:
    return math.exp(z * z) * math.erfc(-z)


def _gamma() -> tuple[bool, str]:
    err = max(abs(gamma_fn(z) / math.gamma(z) - 1) for z in np.linspace(0.1, 50, 500))
    return err <= 1e-12, f"max rel err {err:.2e}"


def _ml_exp() -> tuple[bool, str]:
    z = np.linspace(-5, 5, 101)
    err = float(np.max(np.abs(mittag_leffler(1.0, z) / np.exp(z) - 1)))
    return err <= 1e-9, f"max rel err {err:.2e}"


def _ml_half_check() -> tuple[bool, str]:
    err = max(abs(mittag_leffler(0.5, z) / _ml_half(z) - 1) for z in (-3.0, -1.0, 0.5, 1.0, 3.0))
    return err <= 1e-9, f"max rel err {err:.2e}"


def _rl_power() -> tuple[bool, str]:
    grid = TimeGrid.uniform(1.0, 512)
    t = grid.nodes
    worst = 0.0
    for alpha in (0.25, 0.5, 0.75):
        for beta in (0.0, 1.0, 2.0):
            approx = rl_integral(alpha, GridFunction(grid, t**beta)).values[-1, 0]
            worst = max(worst, abs(approx - power_rule_integral(beta, alpha, 1.0)))
    return worst <= 5e-3, f"max err at t=1 {worst:.2e}"


def _l1_power() -> tuple[bool, str]:
    grid = TimeGrid.uniform(1.0, 512)
    t = grid.nodes
    worst = 0.0
    for alpha in (0.25, 0.5, 0.75):
        for beta in (1.0, 2.0):
            approx = caputo_derivative_l1(alpha, GridFunction(grid, t**beta)).values[-1, 0]
            worst = max(worst, abs(approx - power_rule_caputo(beta, alpha, 1.0)))
    return worst <= 1e-3, f"max err at t=1 {worst:.2e}"


def _solver() -> tuple[bool, str]:
    prob = CauchyProblem(RhsFunction(lambda t, x: x, dim=1, c_f=1.0, lambda_f=1.0), 0.5, [1.0], 1.0)
    x = solve_euler(prob, TimeGrid.uniform(1.0, 1024))
    exact = np.array([_ml_half(math.sqrt(t)) for t in x.grid.nodes])
    err = float(np.max(np.abs(x.values[:, 0] - exact) / exact))
    return err <= 0.02, f"sup rel err {err:.2e}"


def _quadratic() -> tuple[bool, str]:
    grid = TimeGrid.uniform(1.0, 1024)
    x = GridFunction(grid, np.column_stack([grid.nodes, np.zeros(grid.size)]))
    rep = check_quadratic_inequality(x, 0.5)
    return not rep.violated, rep.summary()


def _saddle() -> tuple[bool, str]:
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        M = rng.standard_normal((4, 4))
        dyn = GameDynamics.blackbox(
            lambda t, x, u, v, M=M: np.array([u @ M @ v]), n=1, n_u=4, n_v=4, lambda_g=1.0, c_g=1.0
        )
        P = ActionSet.finite(np.eye(4))
        Q = ActionSet.finite(np.eye(4))
        worst = min(worst, check_saddle(dyn, 0.0, np.zeros(1), np.ones(1), P, Q).gap)
    return worst >= -1e-12, f"min gap {worst:.2e}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "gamma_vs_math_gamma": _gamma,
    "mittag_leffler_order1_is_exp": _ml_exp,
    "mittag_leffler_half_vs_erfc": _ml_half_check,
    "rl_integral_power_rule": _rl_power,
    "caputo_l1_power_rule": _l1_power,
    "euler_relaxation_vs_mittag_leffler": _solver,
    "quadratic_inequality_smooth_case": _quadratic,
    "saddle_weak_duality": _saddle,
}


def run_selftest() -> Iterator[tuple[str, bool, str]]:
    for name, check in CHECKS.items():
        ok, detail = check()
        yield name, ok, detail
