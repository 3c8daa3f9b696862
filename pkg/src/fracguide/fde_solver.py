r"""Fractional forward Euler solver for Caputo initial-value problems.

Solves :math:`({}^C D^\alpha x)(t) = f(t, x(t))`, :math:`x(0) = x_0`, through
the equivalent Volterra integral equation, discretised with the
product-rectangle rule.  The full memory is kept, so a run over ``N`` steps
costs ``O(N^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GridError, NumericAbort
from .frac_core import (
    FracOrder,
    GridFunction,
    ProductRectangleWeights,
    TimeGrid,
    as_order,
    gamma_fn,
    mittag_leffler,
    rl_integral,
)

__all__ = [
    "RhsFunction",
    "CauchyProblem",
    "AprioriBounds",
    "FractionalEulerStepper",
    "solve_euler",
    "apriori_bounds",
    "check_solution_residual",
]


@dataclass(frozen=True)
class RhsFunction:
    """Right-hand side ``f(t, x)`` together with its declared constants.

    ``c_f`` is the linear-growth constant in ``||f(t, x)|| <= (1 + ||x||) c_f``;
    ``lambda_f`` is an optional Lipschitz constant in ``x``.
    """

    eval: Callable[[float, np.ndarray], np.ndarray]
    dim: int
    c_f: float
    lambda_f: Optional[float] = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not self.c_f > 0:
            raise ValueError("c_f must be positive")
        if self.lambda_f is not None and not self.lambda_f > 0:
            raise ValueError("lambda_f must be positive when declared")

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.eval(t, x), dtype=float).reshape(self.dim)

    def growth_violations(
        self, horizon: float, radius: float, n_samples: int = 1000, seed: int = 0
    ) -> int:
        """Count sampled points that break the declared growth bound.

        Samples ``t`` uniformly in ``[0, horizon]`` and ``x`` uniformly in the
        cube ``[-radius, radius]^dim``.
        """
        rng = np.random.default_rng(seed)
        bad = 0
        for _ in range(n_samples):
            t = rng.uniform(0.0, horizon)
            x = rng.uniform(-radius, radius, size=self.dim)
            if np.linalg.norm(self(t, x)) > (1.0 + np.linalg.norm(x)) * self.c_f * (1 + 1e-12):
                bad += 1
        return bad


@dataclass(frozen=True, eq=False)
class CauchyProblem:
    """Initial-value problem ``D^alpha x = f(t, x)`` on ``[0, horizon]``."""

    rhs: RhsFunction
    alpha: float
    x0: np.ndarray
    horizon: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_order(self.alpha))
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if x0.size != self.rhs.dim:
            raise ValueError(f"x0 has length {x0.size}, rhs expects {self.rhs.dim}")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")


@dataclass(frozen=True)
class AprioriBounds:
    """State-norm bound ``R``, Holder constant ``H`` and initial radius ``R0``."""

    R: float
    H: float
    R0: float


class FractionalEulerStepper:
    """Incremental fractional forward Euler integrator on a fixed grid.

    The caller supplies the right-hand side value at the current node via
    :meth:`advance`; the stepper stores it and returns the state at the next
    node.  Used directly by the coupled system/guide simulation.
    """

    def __init__(self, alpha: float | FracOrder, grid: TimeGrid, x0) -> None:
        self.grid = grid
        self.weights = ProductRectangleWeights(alpha, grid)
        self.x0 = np.array(x0, dtype=float).reshape(-1)
        n = grid.size
        self.states = np.empty((n, self.x0.size))
        self.states[0] = self.x0
        self.rates = np.zeros((n, self.x0.size))
        self.m = 0

    @property
    def state(self) -> np.ndarray:
        return self.states[self.m]

    @property
    def time(self) -> float:
        return float(self.grid.nodes[self.m])

    @property
    def done(self) -> bool:
        return self.m >= self.grid.n_steps

    def advance(self, rate) -> np.ndarray:
        """Record ``f(tau_m, x_m) = rate`` and step to node ``m + 1``."""
        if self.done:
            raise IndexError("stepper already reached the end of the grid")
        rate = np.asarray(rate, dtype=float)
        if not np.all(np.isfinite(rate)):
            raise NumericAbort("non-finite right-hand side", self.m)
        self.rates[self.m] = rate
        self.m += 1
        nxt = self.x0 + self.weights.memory_sum(self.m, self.rates)
        if not np.all(np.isfinite(nxt)):
            raise NumericAbort("non-finite state", self.m)
        self.states[self.m] = nxt
        return nxt

    def trajectory(self) -> GridFunction:
        if not self.done:
            raise RuntimeError("integration has not reached the horizon")
        return GridFunction(self.grid, self.states.copy())


def solve_euler(problem: CauchyProblem, grid: TimeGrid) -> GridFunction:
    """Integrate ``problem`` with the fractional forward Euler method on ``grid``.

    Raises
    ------
    GridError
        If the grid horizon differs from the problem horizon.
    NumericAbort
        If the right-hand side returns a non-finite value; the offending node
        index is attached.
    """
    if not math.isclose(grid.horizon, problem.horizon, rel_tol=1e-12):
        raise GridError(f"grid horizon {grid.horizon} != problem horizon {problem.horizon}")
    stepper = FractionalEulerStepper(problem.alpha, grid, problem.x0)
    nodes = grid.nodes
    while not stepper.done:
        stepper.advance(problem.rhs(float(nodes[stepper.m]), stepper.state))
    return stepper.trajectory()


def holder_calibration(alpha: float | FracOrder, horizon: float) -> float:
    """Calibration constant ``T^alpha / Gamma(alpha + 1)`` standing in for ``H_inf``."""
    a = as_order(alpha)
    return horizon**a / gamma_fn(a + 1.0)


def apriori_bounds(R0: float, c_f: float, alpha: float | FracOrder, T: float) -> AprioriBounds:
    """A-priori bounds for solutions started in the ball ``B(R0)``.

    ``R = (1 + R0) E_alpha(c_f T^alpha) - 1``.  The Holder constant is reported
    as ``(1 + R) c_f h_cal`` with ``h_cal = T^alpha / Gamma(alpha + 1)``; it
    is a diagnostic only.
    """
    a = as_order(alpha)
    if R0 < 0 or c_f < 0 or T <= 0:
        raise ValueError("need R0 >= 0, c_f >= 0 and T > 0")
    R = (1.0 + R0) * mittag_leffler(a, c_f * T**a) - 1.0
    H = (1.0 + R) * c_f * holder_calibration(a, T)
    return AprioriBounds(R=float(R), H=float(H), R0=float(R0))


def check_solution_residual(problem: CauchyProblem, x: GridFunction) -> float:
    """Discrete defect ``max_m ||x_m - x0 - I^alpha[f(., x(.))](tau_m)||``.

    Zero (bit for bit) for the output of :func:`solve_euler` on the same grid.
    """
    nodes = x.grid.nodes
    rates = np.array([problem.rhs(float(t), xv) for t, xv in zip(nodes, x.values)])
    integral = rl_integral(problem.alpha, GridFunction(x.grid, rates)).values
    # same association as the stepper, so a solver output gives exactly zero
    defect = x.values - (problem.x0 + integral)
    return float(np.max(np.linalg.norm(defect, axis=1)))
