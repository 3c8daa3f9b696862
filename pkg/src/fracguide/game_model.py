"""Conflict-controlled dynamics, compact action sets and extremal selectors.

The dynamics ``g(t, x, u, v)`` is either *separable affine*,
``drift(t, x) + B u + C v``, or an opaque callable.  Selectors choose

* ``u* in argmin_{u in P} max_{v in Q} <s, g(t, x, u, v)>``
* ``v* in argmax_{v in Q} min_{u in P} <s, g(t, x, u, v)>``

in closed form when the structure allows it (separable dynamics over balls)
and by exhaustive enumeration over finite sets otherwise.  Ties are broken
deterministically: ``0`` for a degenerate ball direction, lowest index for
finite sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import UnsupportedCombination

__all__ = [
    "ActionSet",
    "GameDynamics",
    "ControlRealization",
    "SaddleValues",
    "extremal_u",
    "extremal_v",
    "check_saddle",
    "estimate_lipschitz",
]

MEMBERSHIP_TOL = 1e-12


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ActionSet:
    """Compact action set: a closed Euclidean ball or a finite point set.

    Build instances with :meth:`ball` or :meth:`finite`.
    """

    kind: str
    dim: int
    radius: float = 0.0
    points: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.kind == "ball":
            if not self.radius > 0:
                raise ValueError(f"ball radius must be positive, got {self.radius!r}")
            if self.dim < 1:
                raise ValueError("ball dimension must be positive")
        elif self.kind == "finite":
            pts = np.array(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[0] == 0:
                raise ValueError("finite action set needs a non-empty list of equal-length points")
            object.__setattr__(self, "points", _readonly(pts))
            object.__setattr__(self, "dim", int(pts.shape[1]))
        else:
            raise ValueError(f"unknown action set kind {self.kind!r}")

    @classmethod
    def ball(cls, radius: float, dim: int) -> "ActionSet":
        return cls(kind="ball", dim=int(dim), radius=float(radius))

    @classmethod
    def finite(cls, points) -> "ActionSet":
        pts = np.atleast_2d(np.array(points, dtype=float))
        return cls(kind="finite", dim=int(pts.shape[1]), points=pts)

    @property
    def is_ball(self) -> bool:
        return self.kind == "ball"

    def contains(self, a) -> bool:
        a = np.asarray(a, dtype=float)
        if a.shape != (self.dim,):
            return False
        if self.is_ball:
            return bool(np.linalg.norm(a) <= self.radius + MEMBERSHIP_TOL)
        return bool(np.any(np.all(self.points == a, axis=1)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` points uniformly from the set (uniform in volume for balls)."""
        if self.is_ball:
            d = rng.standard_normal((n, self.dim))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            r = self.radius * rng.random(n) ** (1.0 / self.dim)
            out = d * r[:, None]
            # guard against rounding just outside the sphere
            norms = np.linalg.norm(out, axis=1)
            over = norms > self.radius
            out[over] *= (self.radius / norms[over])[:, None]
            return out
        idx = rng.integers(0, self.points.shape[0], size=n)
        return self.points[idx].copy()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActionSet):
            return NotImplemented
        if self.kind != other.kind or self.dim != other.dim:
            return False
        if self.is_ball:
            return self.radius == other.radius
        return np.array_equal(self.points, other.points)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class GameDynamics:
    """Right-hand side ``g(t, x, u, v)`` with declared constants ``lambda_g`` and ``c_g``.

    For ``structure == "separable_affine"`` the callable ``drift(t, x)`` and the
    matrices ``B`` (``n x n_u``) and ``C`` (``n x n_v``) are used; for
    ``"blackbox"`` only ``func(t, x, u, v)``.
    """

    structure: str
    n: int
    n_u: int
    n_v: int
    lambda_g: float
    c_g: float
    drift: Optional[Callable] = None
    B: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    func: Optional[Callable] = None

    def __post_init__(self) -> None:
        if not self.lambda_g > 0:
            raise ValueError("lambda_g must be positive")
        if not self.c_g > 0:
            raise ValueError("c_g must be positive")
        if self.structure == "separable_affine":
            B = np.atleast_2d(np.array(self.B, dtype=float))
            C = np.atleast_2d(np.array(self.C, dtype=float))
            if B.shape != (self.n, self.n_u) or C.shape != (self.n, self.n_v):
                raise ValueError(
                    f"B must be {self.n}x{self.n_u} and C {self.n}x{self.n_v}, got {B.shape} and {C.shape}"
                )
            if self.drift is None:
                raise ValueError("separable dynamics need a drift")
            object.__setattr__(self, "B", _readonly(B))
            object.__setattr__(self, "C", _readonly(C))
        elif self.structure == "blackbox":
            if self.func is None:
                raise ValueError("blackbox dynamics need func")
        else:
            raise ValueError(f"unknown dynamics structure {self.structure!r}")

    @classmethod
    def separable_affine(cls, drift, B, C, lambda_g: float, c_g: float) -> "GameDynamics":
        B = np.atleast_2d(np.array(B, dtype=float))
        C = np.atleast_2d(np.array(C, dtype=float))
        return cls(
            structure="separable_affine",
            n=B.shape[0],
            n_u=B.shape[1],
            n_v=C.shape[1],
            lambda_g=lambda_g,
            c_g=c_g,
            drift=drift,
            B=B,
            C=C,
        )

    @classmethod
    def blackbox(cls, func, n: int, n_u: int, n_v: int, lambda_g: float, c_g: float) -> "GameDynamics":
        return cls(structure="blackbox", n=n, n_u=n_u, n_v=n_v, lambda_g=lambda_g, c_g=c_g, func=func)

    @property
    def is_separable(self) -> bool:
        return self.structure == "separable_affine"

    def __call__(self, t: float, x, u, v) -> np.ndarray:
        if self.is_separable:
            out = np.asarray(self.drift(t, x), dtype=float) + self.B @ u + self.C @ v
        else:
            out = np.asarray(self.func(t, x, u, v), dtype=float)
        return out.reshape(self.n)

    def growth_violations(
        self, P: ActionSet, Q: ActionSet, horizon: float, radius: float, n_samples: int = 500, seed: int = 0
    ) -> int:
        """Count sampled probes with ``||g|| > (1 + ||x||) c_g``."""
        rng = np.random.default_rng(seed)
        us = P.sample(rng, n_samples)
        vs = Q.sample(rng, n_samples)
        bad = 0
        for i in range(n_samples):
            t = rng.uniform(0.0, horizon)
            x = rng.uniform(-radius, radius, self.n)
            if np.linalg.norm(self(t, x, us[i], vs[i])) > (1.0 + np.linalg.norm(x)) * self.c_g * (1 + 1e-12):
                bad += 1
        return bad

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GameDynamics):
            return NotImplemented
        same = (
            self.structure == other.structure
            and (self.n, self.n_u, self.n_v) == (other.n, other.n_u, other.n_v)
            and self.lambda_g == other.lambda_g
            and self.c_g == other.c_g
        )
        if not same:
            return False
        if self.is_separable:
            return (
                self.drift == other.drift
                and np.array_equal(self.B, other.B)
                and np.array_equal(self.C, other.C)
            )
        return self.func == other.func

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class ControlRealization:
    """Piecewise constant realization; ``values[j]`` acts on ``[tau_j, tau_{j+1})``."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        nodes = _readonly(self.nodes)
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape[0] != nodes.size - 1:
            raise ValueError(f"{nodes.size - 1} cells but {vals.shape[0]} values")
        vals.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", vals)

    def within(self, S: ActionSet) -> bool:
        """True when every value lies in ``S``."""
        if S.is_ball:
            return bool(np.all(np.linalg.norm(self.values, axis=1) <= S.radius + MEMBERSHIP_TOL))
        return all(S.contains(v) for v in self.values)

    def at(self, t: float) -> np.ndarray:
        j = int(np.searchsorted(self.nodes, t, side="right")) - 1
        return self.values[min(max(j, 0), self.values.shape[0] - 1)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ControlRealization):
            return NotImplemented
        return np.array_equal(self.nodes, other.nodes) and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


class SaddleValues(NamedTuple):
    minmax: float
    maxmin: float
    gap: float


# --- selectors ---------------------------------------------------------------


def _ball_extremum(M: np.ndarray, s: np.ndarray, radius: float, sign: float) -> np.ndarray:
    direction = M.T @ s
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        return np.zeros(M.shape[1])
    return sign * radius * direction / norm


def _payoff(dyn: GameDynamics, t, x, s, P: ActionSet, Q: ActionSet) -> np.ndarray:
    """Matrix ``A[i, k] = <s, g(t, x, p_i, q_k)>`` over two finite sets."""
    A = np.empty((P.points.shape[0], Q.points.shape[0]))
    for i, p in enumerate(P.points):
        for k, q in enumerate(Q.points):
            A[i, k] = float(np.dot(s, dyn(t, x, p, q)))
    return A


def _require_finite(dyn: GameDynamics, P: ActionSet, Q: ActionSet) -> None:
    if not dyn.is_separable and (P.is_ball or Q.is_ball):
        raise UnsupportedCombination(
            "black-box dynamics over a ball has no exact extremal selector; use finite action sets"
        )


def extremal_u(dyn: GameDynamics, t: float, x, s, P: ActionSet, Q: ActionSet) -> np.ndarray:
    """Control minimising ``max_v <s, g(t, x, u, v)>`` over ``u in P``."""
    s = np.asarray(s, dtype=float)
    _require_finite(dyn, P, Q)
    if dyn.is_separable:
        # the v-term does not depend on u, so only <s, B u> matters
        if P.is_ball:
            return _ball_extremum(dyn.B, s, P.radius, -1.0)
        scores = P.points @ (dyn.B.T @ s)
        return P.points[int(np.argmin(scores))].copy()
    A = _payoff(dyn, t, x, s, P, Q)
    return P.points[int(np.argmin(A.max(axis=1)))].copy()


def extremal_v(dyn: GameDynamics, t: float, x, s, P: ActionSet, Q: ActionSet) -> np.ndarray:
    """Action maximising ``min_u <s, g(t, x, u, v)>`` over ``v in Q``."""
    s = np.asarray(s, dtype=float)
    _require_finite(dyn, P, Q)
    if dyn.is_separable:
        if Q.is_ball:
            return _ball_extremum(dyn.C, s, Q.radius, 1.0)
        scores = Q.points @ (dyn.C.T @ s)
        return Q.points[int(np.argmax(scores))].copy()
    A = _payoff(dyn, t, x, s, P, Q)
    return Q.points[int(np.argmax(A.min(axis=0)))].copy()


def _support(M: np.ndarray, s: np.ndarray, S: ActionSet, sign: float) -> float:
    """``max_{a in S} sign * <s, M a>`` (times ``sign``), i.e. the support function."""
    d = M.T @ s
    if S.is_ball:
        return sign * S.radius * float(np.linalg.norm(d))
    vals = S.points @ d
    return float(vals.max()) if sign > 0 else float(vals.min())


def check_saddle(dyn: GameDynamics, t: float, x, s, P: ActionSet, Q: ActionSet) -> SaddleValues:
    """Both sides of the min-max / max-min equality for ``<s, g>`` and their gap.

    Separable dynamics decouple, so both values equal
    ``<s, drift> + min_u <s, B u> + max_v <s, C v>``; finite sets are enumerated.
    """
    s = np.asarray(s, dtype=float)
    _require_finite(dyn, P, Q)
    if dyn.is_separable:
        base = float(np.dot(s, np.asarray(dyn.drift(t, x), dtype=float)))
        u_part = _support(dyn.B, s, P, -1.0)
        v_part = _support(dyn.C, s, Q, 1.0)
        # evaluate each side in its own order of operations
        minmax = (base + v_part) + u_part
        maxmin = (base + u_part) + v_part
        return SaddleValues(minmax, maxmin, minmax - maxmin)
    A = _payoff(dyn, t, x, s, P, Q)
    minmax = float(A.max(axis=1).min())
    maxmin = float(A.min(axis=0).max())
    return SaddleValues(minmax, maxmin, minmax - maxmin)


def estimate_lipschitz(
    dyn: GameDynamics,
    P: ActionSet,
    Q: ActionSet,
    horizon: float,
    radius: float,
    n_probes: int = 2000,
    seed: int = 0,
) -> float:
    """Largest sampled quotient ``||g(t,x,u,v) - g(t,y,u,v)|| / ||x - y||`` on ``B(radius)``.

    A lower estimate of ``lambda_g``; diagnostic only.
    """
    rng = np.random.default_rng(seed)
    ball = ActionSet.ball(radius, dyn.n)
    xs = ball.sample(rng, n_probes)
    ys = ball.sample(rng, n_probes)
    us = P.sample(rng, n_probes)
    vs = Q.sample(rng, n_probes)
    ts = rng.uniform(0.0, horizon, n_probes)
    best = 0.0
    for t, x, y, u, v in zip(ts, xs, ys, us, vs):
        d = float(np.linalg.norm(x - y))
        if d > 0:
            best = max(best, float(np.linalg.norm(dyn(t, x, u, v) - dyn(t, y, u, v))) / d)
    return best
