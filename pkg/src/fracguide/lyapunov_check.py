"""Grid verifier for the fractional derivative inequality of convex functions.

For convex ``V`` with ``V(0) = 0`` and a trajectory ``x`` with ``x(0) = 0``,
``y = V(x)`` satisfies ``D^alpha y <= <grad V(x), D^alpha x>`` almost
everywhere.  The checks below estimate both sides with the L1 scheme and
report the largest excess of the left side over the right side.

The L1 scheme has decreasing positive weights, so by convexity the discrete
inequality holds node by node up to rounding.  The tolerance
``C_L1 * h**(1 - alpha)`` is therefore a generous guard: anything above it
signals a wrong trajectory, a non-convex ``V`` or a bad gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GridError
from .frac_core import (
    FracOrder,
    GridFunction,
    TimeGrid,
    as_order,
    caputo_derivative_l1,
    gamma_fn,
    holder_modulus,
)

__all__ = [
    "C_L1",
    "LyapunovFn",
    "InequalityReport",
    "default_tolerance",
    "check_convex_inequality",
    "check_quadratic_inequality",
    "quadratic",
    "log_sum_exp",
    "quartic_regularized",
    "shifted_quadratic",
]

# Largest observed |L1 error at t = 1| / h**(1 - alpha) over the power-rule
# battery (beta in {0, 0.5, 1, 2}, alpha in {0.25, 0.5, 0.75}, N = 256..2048)
# was 2.76e-3, rounded up.  tests/test_lyapunov_check.py re-measures it.
C_L1 = 3e-3

ZERO_START_TOL = 1e-12


@dataclass(frozen=True)
class LyapunovFn:
    """Convex function with gradient and declared gradient-Lipschitz constant."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lambda_V: float
    name: str = "V"

    def __post_init__(self) -> None:
        if not self.lambda_V > 0:
            raise ValueError("lambda_V must be positive")

    def values_along(self, x: GridFunction) -> np.ndarray:
        return np.array([self.value(v) for v in x.values], dtype=float)

    def gradients_along(self, x: GridFunction) -> np.ndarray:
        return np.array([self.gradient(v) for v in x.values], dtype=float)

    def spot_check(self, dim: int, radius: float = 1.0, n_segments: int = 1000, seed: int = 0) -> dict:
        """Probabilistic checks of ``V(0) = 0``, midpoint convexity and the gradient.

        Returns a dict with the worst midpoint-convexity excess, the worst
        relative mismatch between the gradient and central differences and
        ``|V(0)|``.  Points are drawn uniformly from the cube of half-width
        ``radius``.
        """
        rng = np.random.default_rng(seed)
        worst_mid = -np.inf
        worst_grad = 0.0
        step = 1e-6 * max(radius, 1.0)
        for _ in range(n_segments):
            a = rng.uniform(-radius, radius, dim)
            b = rng.uniform(-radius, radius, dim)
            mid = self.value(0.5 * (a + b)) - 0.5 * (self.value(a) + self.value(b))
            worst_mid = max(worst_mid, mid)
            g = np.asarray(self.gradient(a), dtype=float)
            fd = np.array(
                [(self.value(a + step * e) - self.value(a - step * e)) / (2 * step) for e in np.eye(dim)]
            )
            scale = max(np.linalg.norm(g), 1.0)
            worst_grad = max(worst_grad, float(np.linalg.norm(fd - g) / scale))
        return {
            "value_at_zero": abs(float(self.value(np.zeros(dim)))),
            "midpoint_excess": float(worst_mid),
            "gradient_mismatch": worst_grad,
        }

    def is_plausible(self, dim: int, radius: float = 1.0, n_segments: int = 1000, seed: int = 0) -> bool:
        r = self.spot_check(dim, radius, n_segments, seed)
        return r["value_at_zero"] <= 1e-12 and r["midpoint_excess"] <= 1e-12 and r["gradient_mismatch"] <= 1e-6


@dataclass(frozen=True, eq=False)
class InequalityReport:
    """Node-wise estimates of both sides of the inequality.

    ``lhs[m]`` estimates ``D^alpha V(x)`` and ``rhs[m]`` estimates
    ``<grad V(x), D^alpha x>`` at node ``m``.  Node 0 is excluded from
    ``max_violation`` since both sides vanish there by construction.
    """

    grid: TimeGrid
    lhs: np.ndarray
    rhs: np.ndarray
    max_violation: float
    tolerance_used: float

    @property
    def violated(self) -> bool:
        return self.max_violation > self.tolerance_used

    @property
    def min_margin(self) -> float:
        return float(np.min(self.rhs[1:] - self.lhs[1:]))

    def summary(self) -> str:
        status = "VIOLATED" if self.violated else "ok"
        return (
            f"{status}: max_violation={self.max_violation:.3e} tol={self.tolerance_used:.3e} "
            f"nodes={self.grid.size}"
        )


def default_tolerance(grid: TimeGrid, alpha: float | FracOrder) -> float:
    """``C_L1 * h**(1 - alpha)`` for a uniform grid."""
    a = as_order(alpha)
    return C_L1 * grid.step() ** (1.0 - a)


def _prepare(x: GridFunction, shift: bool) -> GridFunction:
    if not x.grid.is_uniform:
        raise GridError("inequality checks need a uniform grid")
    if shift:
        x = x.shifted()
    if np.max(np.abs(x.values[0])) > ZERO_START_TOL:
        raise ValueError(
            f"trajectory must start at 0 (|x(0)| = {np.max(np.abs(x.values[0])):.3e}); pass shift=True"
        )
    return x


def _report(x: GridFunction, lhs: np.ndarray, rhs: np.ndarray, tol: float) -> InequalityReport:
    viol = float(np.max(lhs[1:] - rhs[1:])) if x.grid.size > 1 else 0.0
    lhs.setflags(write=False)
    rhs.setflags(write=False)
    return InequalityReport(grid=x.grid, lhs=lhs, rhs=rhs, max_violation=viol, tolerance_used=tol)


def check_convex_inequality(
    V: LyapunovFn,
    x: GridFunction,
    alpha: float | FracOrder,
    tol: Optional[float] = None,
    *,
    shift: bool = False,
) -> InequalityReport:
    """Check ``D^alpha V(x) <= <grad V(x), D^alpha x>`` at every grid node.

    Parameters
    ----------
    V:
        Convex function with ``V(0) = 0``.
    x:
        Trajectory on a uniform grid.  It must start at the origin unless
        ``shift`` is set, in which case ``x - x(0)`` is checked.
    alpha:
        Derivative order.
    tol:
        Violation tolerance; defaults to :func:`default_tolerance`.
    """
    a = as_order(alpha)
    x = _prepare(x, shift)
    if tol is None:
        tol = default_tolerance(x.grid, a)
    y = GridFunction(x.grid, V.values_along(x))
    lhs = caputo_derivative_l1(a, y).values[:, 0].copy()
    dx = caputo_derivative_l1(a, x).values
    rhs = np.einsum("ij,ij->i", V.gradients_along(x), dx)
    return _report(x, lhs, rhs, tol)


def check_quadratic_inequality(
    x: GridFunction,
    alpha: float | FracOrder,
    tol: Optional[float] = None,
    *,
    shift: bool = False,
) -> InequalityReport:
    """Specialisation of :func:`check_convex_inequality` to ``V(x) = ||x||^2``."""
    a = as_order(alpha)
    x = _prepare(x, shift)
    if tol is None:
        tol = default_tolerance(x.grid, a)
    sq = np.einsum("ij,ij->i", x.values, x.values)
    lhs = caputo_derivative_l1(a, GridFunction(x.grid, sq)).values[:, 0].copy()
    dx = caputo_derivative_l1(a, x).values
    rhs = 2.0 * np.einsum("ij,ij->i", x.values, dx)
    return _report(x, lhs, rhs, tol)


def _derivative_bound(V: LyapunovFn, x: GridFunction, alpha: float | FracOrder) -> float:
    """Sup bound ``2 lambda_V H^2 T^alpha / Gamma(1 - alpha) + M_V w`` on ``|D^alpha V(x)|``.

    ``H`` is the empirical Holder modulus of ``x``, ``w`` the largest L1
    estimate of ``||D^alpha x||`` and ``M_V`` the largest gradient norm along
    the trajectory.  Diagnostic only.
    """
    a = as_order(alpha)
    H = holder_modulus(x, a)
    w = float(np.max(np.linalg.norm(caputo_derivative_l1(a, x).values, axis=1)))
    M_V = float(np.max(np.linalg.norm(V.gradients_along(x), axis=1)))
    T = x.grid.horizon
    return 2.0 * V.lambda_V * H**2 * T**a / gamma_fn(1.0 - a) + M_V * w


# --- stock Lyapunov functions -------------------------------------------------


def quadratic() -> LyapunovFn:
    return LyapunovFn(
        value=lambda x: float(np.dot(x, x)),
        gradient=lambda x: 2.0 * np.asarray(x, dtype=float),
        lambda_V=2.0,
        name="quadratic",
    )


def shifted_quadratic(center) -> LyapunovFn:
    """``V(z) = ||z + c||^2 - ||c||^2``: the squared norm seen from a start point ``c``.

    Applied to ``s - s(0)`` with ``c = s(0)``, it reproduces
    ``||s(t)||^2 - ||s(0)||^2``.
    """
    c = np.array(center, dtype=float)
    c2 = float(np.dot(c, c))

    def value(z):
        w = np.asarray(z, dtype=float) + c
        return float(np.dot(w, w)) - c2

    return LyapunovFn(
        value=value,
        gradient=lambda z: 2.0 * (np.asarray(z, dtype=float) + c),
        lambda_V=2.0,
        name="shifted_quadratic",
    )


def log_sum_exp(dim: int) -> LyapunovFn:
    """``log(sum(exp(x))) - log(dim)``; convex, smooth, zero at the origin."""
    offset = float(np.log(dim))

    def value(x):
        x = np.asarray(x, dtype=float)
        m = x.max()
        return float(m + np.log(np.exp(x - m).sum()) - offset)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        e = np.exp(x - x.max())
        return e / e.sum()

    return LyapunovFn(value=value, gradient=gradient, lambda_V=1.0, name="log_sum_exp")


def quartic_regularized(weight: float = 0.25, radius: float = 10.0) -> LyapunovFn:
    """``||x||^2 + weight * ||x||^4``; ``lambda_V`` is declared on the ball of ``radius``."""

    def value(x):
        r2 = float(np.dot(x, x))
        return r2 + weight * r2 * r2

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return (2.0 + 4.0 * weight * float(np.dot(x, x))) * x

    return LyapunovFn(
        value=value,
        gradient=gradient,
        lambda_V=2.0 + 12.0 * weight * radius**2,
        name="quartic_regularized",
    )
