"""Mutual aiming between a conflict-controlled system and its guide.

The system ``x`` and the guide ``y`` share the dynamics ``g``.  At each
partition node ``tau_j`` the deviation ``s = x(tau_j) - y(tau_j)`` fixes

* the system control ``u_j``, by :func:`~fracguide.game_model.extremal_u`, and
* the guide disturbance ``v~_j``, by :func:`~fracguide.game_model.extremal_v`,

while the system disturbance ``v`` and the guide control ``u~`` come from
arbitrary policies.  Both motions are advanced with the fractional forward
Euler method, keeping the whole memory.

Random policies draw from independent PCG64 streams: the stream for a policy
in slot ``i`` (``u`` = 0, ``v`` = 1, ``u_tilde`` = 2, ``v_tilde`` = 3) is
``SeedSequence(seed, spawn_key=(i,))``, so changing one policy never shifts
the draws of another.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import MittagLefflerRangeError
from .fde_solver import FractionalEulerStepper, apriori_bounds
from .frac_core import GridFunction, TimeGrid, as_order, gamma_fn, mittag_leffler
from .game_model import ActionSet, ControlRealization, GameDynamics, extremal_u, extremal_v
from .lyapunov_check import InequalityReport, check_convex_inequality, shifted_quadratic

__all__ = [
    "Policy",
    "AimingConfig",
    "SimulationResult",
    "TheoremConstants",
    "run_aiming",
    "theorem_constants",
    "deviation_vs_diameter",
    "check_deviation_inequality",
    "SLOTS",
]

SLOTS = ("u", "v", "u_tilde", "v_tilde")


@dataclass(frozen=True, eq=False)
class Policy:
    """How one of the four realizations is formed.

    ``kind`` is ``"extremal"`` (the aiming rule for the slot), ``"random"``
    (i.i.d. uniform draws per partition cell) or ``"fixed"`` (given values;
    a single row is held constant on every cell).
    """

    kind: str
    seed: Optional[int] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.kind not in ("extremal", "random", "fixed"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "random" and self.seed is None:
            raise ValueError("random policy needs a seed")
        if self.kind == "fixed":
            vals = np.atleast_2d(np.array(self.values, dtype=float))
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)

    @classmethod
    def extremal(cls) -> "Policy":
        return cls("extremal")

    @classmethod
    def random(cls, seed: int) -> "Policy":
        return cls("random", seed=int(seed))

    @classmethod
    def fixed(cls, values) -> "Policy":
        return cls("fixed", values=values)

    def with_seed(self, seed: int) -> "Policy":
        return replace(self, seed=int(seed)) if self.kind == "random" else self

    def realize(self, slot: int, S: ActionSet, n_cells: int) -> Optional[np.ndarray]:
        """Pre-draw the per-cell values, or ``None`` for the extremal rule."""
        if self.kind == "extremal":
            return None
        if self.kind == "random":
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(slot,))))
            return S.sample(rng, n_cells)
        vals = self.values
        if vals.shape[1] != S.dim:
            raise ValueError(f"fixed policy has dimension {vals.shape[1]}, set has {S.dim}")
        if not all(S.contains(v) for v in vals):
            raise ValueError("fixed policy has values outside its action set")
        if vals.shape[0] == 1:
            return np.repeat(vals, n_cells, axis=0)
        if vals.shape[0] != n_cells:
            raise ValueError(f"fixed policy has {vals.shape[0]} values for {n_cells} cells")
        return vals.copy()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Policy):
            return NotImplemented
        if self.kind != other.kind or self.seed != other.seed:
            return False
        if self.kind == "fixed":
            return np.array_equal(self.values, other.values)
        return True

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class AimingConfig:
    """Everything needed to reproduce one coupled system/guide run."""

    dyn: GameDynamics
    alpha: float
    T: float
    P: ActionSet
    Q: ActionSet
    x0: np.ndarray
    y0: np.ndarray
    partition: TimeGrid
    v_policy: Policy = field(default_factory=lambda: Policy.random(0))
    u_tilde_policy: Policy = field(default_factory=lambda: Policy.random(0))
    u_policy: Policy = field(default_factory=Policy.extremal)
    v_tilde_policy: Policy = field(default_factory=Policy.extremal)
    substeps: int = 1
    eps: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_order(self.alpha))
        for name in ("x0", "y0"):
            vec = np.array(getattr(self, name), dtype=float).reshape(-1)
            if vec.size != self.dyn.n:
                raise ValueError(f"{name} has length {vec.size}, dynamics has n = {self.dyn.n}")
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)
        if not math.isclose(self.partition.horizon, self.T, rel_tol=1e-12):
            raise ValueError(f"partition ends at {self.partition.horizon}, horizon is {self.T}")
        if self.P.dim != self.dyn.n_u or self.Q.dim != self.dyn.n_v:
            raise ValueError("action set dimensions do not match the dynamics")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def policies(self) -> dict:
        return {
            "u": self.u_policy,
            "v": self.v_policy,
            "u_tilde": self.u_tilde_policy,
            "v_tilde": self.v_tilde_policy,
        }

    @property
    def seed(self) -> Optional[int]:
        """Seed of the first random policy (disturbance first), if any."""
        for key in ("v", "u_tilde", "u", "v_tilde"):
            p = self.policies[key]
            if p.kind == "random":
                return p.seed
        return None

    def with_seed(self, seed: int) -> "AimingConfig":
        """Copy with every random policy reseeded to ``seed``."""
        return replace(
            self,
            u_policy=self.u_policy.with_seed(seed),
            v_policy=self.v_policy.with_seed(seed),
            u_tilde_policy=self.u_tilde_policy.with_seed(seed),
            v_tilde_policy=self.v_tilde_policy.with_seed(seed),
        )

    def with_step(self, step: float) -> "AimingConfig":
        return replace(self, partition=TimeGrid.from_step(self.T, step))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AimingConfig):
            return NotImplemented
        return (
            self.dyn == other.dyn
            and self.alpha == other.alpha
            and self.T == other.T
            and self.P == other.P
            and self.Q == other.Q
            and np.array_equal(self.x0, other.x0)
            and np.array_equal(self.y0, other.y0)
            and self.partition == other.partition
            and self.policies == other.policies
            and self.substeps == other.substeps
            and self.eps == other.eps
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Coupled trajectories on the partition nodes plus the realized actions."""

    x_traj: GridFunction
    y_traj: GridFunction
    u_real: ControlRealization
    v_real: ControlRealization
    u_tilde_real: ControlRealization
    v_tilde_real: ControlRealization
    deviation: np.ndarray
    deviation_sup: float
    K: float
    eps: float
    bound_rhs: float
    seed: Optional[int] = None

    @property
    def grid(self) -> TimeGrid:
        return self.x_traj.grid

    def deviation_trajectory(self) -> GridFunction:
        return GridFunction(self.grid, self.x_traj.values - self.y_traj.values)


@dataclass(frozen=True)
class TheoremConstants:
    """Constants of the proximity guarantee ``||x - y|| <= eps + K ||x0 - y0||``.

    ``delta1`` is ``None`` unless a modulus of continuity in ``t`` was supplied;
    ``delta`` is then ``None`` as well.
    """

    K: float
    eta: float
    delta1: Optional[float]
    delta2: float
    delta: Optional[float]
    R_bar: float
    H_bar: float
    eps: float
    holder_source: str


def theorem_constants(
    dyn: GameDynamics,
    alpha: float,
    T: float,
    R0: float,
    eps: float,
    holder: Optional[float] = None,
    t_modulus: Optional[Callable[[float], float]] = None,
) -> TheoremConstants:
    """Evaluate ``K``, ``eta`` and the step thresholds for the aiming guarantee.

    Parameters
    ----------
    holder:
        Holder constant ``H_bar`` of the motions, typically the empirical
        modulus of simulated trajectories.  Defaults to the a-priori value.
    t_modulus:
        Inverse modulus of continuity of ``g`` in ``t``: given a target
        ``bound`` it returns a ``delta1`` such that ``|t - tau| <= delta1``
        implies ``||g(t, ...) - g(tau, ...)|| <= bound`` on ``B(R_bar)``.

    Raises
    ------
    MittagLefflerRangeError
        If ``2 lambda_g T^alpha`` is outside the Mittag-Leffler envelope.
    """
    a = as_order(alpha)
    if not eps > 0:
        raise ValueError("eps must be positive")
    lam = dyn.lambda_g
    E = mittag_leffler(a, 2.0 * lam * T**a)
    K = math.sqrt(E)
    eta = gamma_fn(a + 1.0) * eps**2 / (2.0 * T**a * E)
    bounds = apriori_bounds(R0, dyn.c_g, a, T)
    R_bar = bounds.R
    if holder is None:
        H_bar, source = bounds.H, "apriori"
    else:
        H_bar, source = float(holder), "empirical"
    cap = min(eta / (8.0 * H_bar * (1.0 + R_bar) * dyn.c_g), eta / (16.0 * R_bar * lam * H_bar))
    delta2 = cap ** (1.0 / a)
    delta1 = None if t_modulus is None else float(t_modulus(eta / (16.0 * R_bar)))
    delta = None if delta1 is None else min(delta1, delta2)
    return TheoremConstants(
        K=K, eta=eta, delta1=delta1, delta2=delta2, delta=delta,
        R_bar=R_bar, H_bar=H_bar, eps=float(eps), holder_source=source,
    )


def _refine(partition: TimeGrid, substeps: int) -> TimeGrid:
    if substeps == 1:
        return partition
    t = partition.nodes
    frac = np.arange(substeps) / substeps
    fine = (t[:-1, None] + np.diff(t)[:, None] * frac[None, :]).ravel()
    return TimeGrid(np.append(fine, t[-1]))


def run_aiming(config: AimingConfig) -> SimulationResult:
    """Simulate the system and the guide under the mutual aiming procedure.

    Deterministic: the same config always yields bit-identical results.

    Raises
    ------
    UnsupportedCombination
        If an extremal policy is requested for dynamics/sets without an exact selector.
    NumericAbort
        If a state or right-hand side becomes non-finite.
    """
    cfg = config
    dyn, P, Q = cfg.dyn, cfg.P, cfg.Q
    part = cfg.partition
    k = part.n_steps
    sets = {"u": P, "v": Q, "u_tilde": P, "v_tilde": Q}
    drawn = {name: pol.realize(SLOTS.index(name), sets[name], k) for name, pol in cfg.policies.items()}
    real = {name: np.empty((k, sets[name].dim)) for name in SLOTS}

    sim = _refine(part, cfg.substeps)
    xs = FractionalEulerStepper(cfg.alpha, sim, cfg.x0)
    ys = FractionalEulerStepper(cfg.alpha, sim, cfg.y0)
    fine_t = sim.nodes

    for j in range(k):
        t = float(part.nodes[j])
        x = xs.state.copy()
        s = x - ys.state
        for name in SLOTS:
            if drawn[name] is not None:
                real[name][j] = drawn[name][j]
            elif name in ("u", "u_tilde"):
                real[name][j] = extremal_u(dyn, t, x, s, P, Q)
            else:
                real[name][j] = extremal_v(dyn, t, x, s, P, Q)
        u, v, ut, vt = (real[name][j] for name in SLOTS)
        for _ in range(cfg.substeps):
            tm = float(fine_t[xs.m])
            rx = dyn(tm, xs.state, u, v)
            ry = dyn(tm, ys.state, ut, vt)
            xs.advance(rx)
            ys.advance(ry)

    step = cfg.substeps
    x_vals = xs.states[::step].copy()
    y_vals = ys.states[::step].copy()
    dev = np.linalg.norm(x_vals - y_vals, axis=1)
    try:
        K = math.sqrt(mittag_leffler(cfg.alpha, 2.0 * dyn.lambda_g * cfg.T**cfg.alpha))
    except MittagLefflerRangeError:
        K = math.inf
    d0 = float(np.linalg.norm(cfg.x0 - cfg.y0))
    return SimulationResult(
        x_traj=GridFunction(part, x_vals),
        y_traj=GridFunction(part, y_vals),
        u_real=ControlRealization(part.nodes, real["u"]),
        v_real=ControlRealization(part.nodes, real["v"]),
        u_tilde_real=ControlRealization(part.nodes, real["u_tilde"]),
        v_tilde_real=ControlRealization(part.nodes, real["v_tilde"]),
        deviation=dev,
        deviation_sup=float(dev.max()),
        K=K,
        eps=cfg.eps,
        bound_rhs=cfg.eps + K * d0,
        seed=cfg.seed,
    )


def deviation_vs_diameter(
    config: AimingConfig, diameters: Sequence[float], workers: int = 1
) -> list[dict]:
    """Run the procedure on uniform partitions of each diameter with the same seeds.

    Returns ``[{"delta": d, "deviation_sup": ...}, ...]`` in input order.
    """
    ds = [float(d) for d in diameters]
    if any(d <= 0 for d in ds):
        raise ValueError("diameters must be positive")
    if any(b > a for a, b in zip(ds, ds[1:])):
        raise ValueError("diameters must be sorted in descending order")
    configs = [config.with_step(d) for d in ds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_aiming, configs))
    else:
        results = [run_aiming(c) for c in configs]
    return [{"delta": d, "deviation_sup": r.deviation_sup} for d, r in zip(ds, results)]


def check_deviation_inequality(
    result: SimulationResult | GridFunction, alpha: float, tol: Optional[float] = None
) -> InequalityReport:
    """Check ``D^alpha nu <= 2 <s, D^alpha s>`` for ``nu = ||s||^2 - ||s(0)||^2``.

    ``s = x - y`` is taken from a simulation result or given directly.
    """
    s = result.deviation_trajectory() if isinstance(result, SimulationResult) else result
    V = shifted_quadratic(s.values[0])
    return check_convex_inequality(V, s, alpha, tol, shift=True)
