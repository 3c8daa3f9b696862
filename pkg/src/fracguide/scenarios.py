"""Scenario files, drift expressions and the built-in example scenario.

Scenario file grammar (``fracguide-scenario v1``)::

    fracguide-scenario v1
    # comments start with '#'
    [dynamics]
    kind = separable_affine
    drift = x2 ; -sin(x1) + cos(t)      # one expression per state component
    B = 0.3 0 ; 0 0.5                    # rows separated by ';'
    C = 0.4 0 ; 0 0.2
    lambda_g = 1
    c_g = 1.9
    [order]
    alpha = 0.5
    [horizon]
    T = 5
    [sets]
    P = ball 1 2                          # ball <radius> <dim>
    Q = finite 0.5 0 ; -0.5 0             # finite <point> ; <point> ...
    [initial]
    x0 = -1 0
    y0 = 0 1
    [partition]
    step = 0.0005                         # or: nodes = 0 0.1 0.25 ...
    substeps = 1
    [policies]
    u = extremal
    v = random 42
    u_tilde = random 42
    v_tilde = extremal                    # or: fixed <vec> ; <vec> ...
    [report]
    eps = 0.1
    [output]
    csv = run.csv
    meta = run.meta

``[dynamics]`` may instead hold ``builtin = paper``.  Drift expressions may
use numbers, ``t``, ``x1 .. xn``, ``+``, ``-``, ``*``, parentheses, ``sin``
and ``cos``; nothing else is accepted.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .aiming import AimingConfig, Policy
from .errors import ScenarioParseError
from .frac_core import TimeGrid
from .game_model import ActionSet, GameDynamics

__all__ = [
    "HEADER",
    "ExpressionDrift",
    "Scenario",
    "scenario_paper_example",
    "parse_scenario",
    "load_scenario",
    "dump_scenario",
    "BUILTINS",
]

HEADER = "fracguide-scenario v1"

# --- drift expressions ------------------------------------------------------

_ALLOWED_FUNCS = {"sin": math.sin, "cos": math.cos}
_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.USub,
    ast.UAdd,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
)


def _compile_expr(src: str, n: int):
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {src!r}: {exc.msg}") from None
    names = {"t"} | {f"x{i + 1}" for i in range(n)}
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ValueError(f"{type(node).__name__} is not allowed in {src!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError(f"only numeric constants are allowed in {src!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_FUNCS:
                raise ValueError(f"only sin and cos may be called in {src!r}")
            if len(node.args) != 1 or node.keywords:
                raise ValueError(f"sin/cos take exactly one argument in {src!r}")
        if isinstance(node, ast.Name) and node.id not in names and node.id not in _ALLOWED_FUNCS:
            raise ValueError(f"unknown symbol {node.id!r} in {src!r}")
    return compile(tree, "<drift>", "eval")


class ExpressionDrift:
    """Drift ``(t, x) -> vector`` given by one restricted expression per component."""

    def __init__(self, exprs) -> None:
        self.exprs = tuple(str(e).strip() for e in exprs)
        n = len(self.exprs)
        if n == 0:
            raise ValueError("drift needs at least one component")
        self._code = tuple(_compile_expr(e, n) for e in self.exprs)
        self._symbols = tuple(f"x{i + 1}" for i in range(n))

    @property
    def dim(self) -> int:
        return len(self.exprs)

    def __call__(self, t: float, x) -> np.ndarray:
        env = dict(_ALLOWED_FUNCS)
        env["t"] = float(t)
        for name, val in zip(self._symbols, x):
            env[name] = float(val)
        with np.errstate(all="ignore"):
            return np.array([eval(c, {"__builtins__": {}}, env) for c in self._code], dtype=float)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExpressionDrift):
            return NotImplemented
        return self.exprs == other.exprs

    def __hash__(self) -> int:
        return hash(self.exprs)

    def __repr__(self) -> str:
        return f"ExpressionDrift({list(self.exprs)!r})"


# --- built-in scenario -------------------------------------------------------


def _paper_dynamics() -> GameDynamics:
    # |(x2, -sin x1)| <= |x| and the x-Jacobian has norm <= 1, so lambda_g = 1;
    # |g| <= |x| + 1 + 0.5 + 0.4 <= 1.9 (1 + |x|), so c_g = 1.9.
    return GameDynamics.separable_affine(
        drift=ExpressionDrift(["x2", "-sin(x1) + cos(t)"]),
        B=np.diag([0.3, 0.5]),
        C=np.diag([0.4, 0.2]),
        lambda_g=1.0,
        c_g=1.9,
    )


def scenario_paper_example(seed: int = 0, step: float = 0.0005) -> AimingConfig:
    """The two-dimensional example with ``alpha = 0.5`` on ``[0, 5]``.

    Unit-ball control and disturbance sets, ``x0 = (-1, 0)``, ``y0 = (0, 1)``,
    uniform partition with step ``0.0005``; the disturbance ``v`` and the
    guide control ``u~`` are seeded random piecewise-constant realizations.
    """
    return AimingConfig(
        dyn=_paper_dynamics(),
        alpha=0.5,
        T=5.0,
        P=ActionSet.ball(1.0, 2),
        Q=ActionSet.ball(1.0, 2),
        x0=np.array([-1.0, 0.0]),
        y0=np.array([0.0, 1.0]),
        partition=TimeGrid.from_step(5.0, step),
        v_policy=Policy.random(seed),
        u_tilde_policy=Policy.random(seed),
    )


BUILTINS = {"paper": scenario_paper_example}


# --- scenario files ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Scenario:
    """Parsed scenario: the run configuration plus optional output paths."""

    config: AimingConfig
    csv_path: Optional[str] = None
    meta_path: Optional[str] = None
    builtin: Optional[str] = None


def _tokens(text: str, line: int) -> list[float]:
    try:
        return [float(tok) for tok in text.split()]
    except ValueError:
        raise ScenarioParseError(f"expected numbers, got {text!r}", line) from None


def _matrix(text: str, line: int) -> np.ndarray:
    rows = [_tokens(r, line) for r in text.split(";")]
    if not rows or any(len(r) != len(rows[0]) for r in rows) or not rows[0]:
        raise ScenarioParseError(f"ragged or empty matrix {text!r}", line)
    return np.array(rows)


def _vector(text: str, line: int) -> np.ndarray:
    vals = _tokens(text, line)
    if not vals:
        raise ScenarioParseError("empty vector", line)
    return np.array(vals)


def _action_set(text: str, line: int) -> ActionSet:
    kind, _, rest = text.strip().partition(" ")
    try:
        if kind == "ball":
            vals = _tokens(rest, line)
            if len(vals) != 2 or vals[1] != int(vals[1]):
                raise ScenarioParseError("ball takes <radius> <dim>", line)
            return ActionSet.ball(vals[0], int(vals[1]))
        if kind == "finite":
            return ActionSet.finite(_matrix(rest, line))
    except ValueError as exc:
        if isinstance(exc, ScenarioParseError):
            raise
        raise ScenarioParseError(str(exc), line) from None
    raise ScenarioParseError(f"unknown set kind {kind!r} (use ball or finite)", line)


def _policy(text: str, line: int) -> Policy:
    kind, _, rest = text.strip().partition(" ")
    if kind == "extremal" and not rest.strip():
        return Policy.extremal()
    if kind == "random":
        vals = rest.split()
        if len(vals) != 1 or not vals[0].lstrip("-").isdigit():
            raise ScenarioParseError("random takes one integer seed", line)
        return Policy.random(int(vals[0]))
    if kind == "fixed":
        return Policy.fixed(_matrix(rest, line))
    raise ScenarioParseError(f"unknown policy {text.strip()!r}", line)


def _read_sections(text: str) -> dict:
    lines = text.splitlines()
    first = next((i for i, l in enumerate(lines) if l.strip() and not l.strip().startswith("#")), None)
    if first is None or lines[first].strip() != HEADER:
        raise ScenarioParseError(f"missing header line {HEADER!r}", (first or 0) + 1)
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for idx in range(first + 1, len(lines)):
        lineno = idx + 1
        raw = lines[idx].split("#", 1)[0].strip()
        if not raw:
            continue
        if raw.startswith("["):
            if not raw.endswith("]") or len(raw) < 3:
                raise ScenarioParseError(f"malformed section header {raw!r}", lineno)
            current = raw[1:-1].strip()
            if current in sections:
                raise ScenarioParseError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if current is None:
            raise ScenarioParseError("key outside of any section", lineno)
        key, sep, value = raw.partition("=")
        if not sep:
            raise ScenarioParseError(f"expected 'key = value', got {raw!r}", lineno)
        key = key.strip()
        if key in sections[current]:
            raise ScenarioParseError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current][key] = (value.strip(), lineno)
    return sections


_KNOWN = {
    "dynamics": {"builtin", "kind", "drift", "B", "C", "lambda_g", "c_g"},
    "order": {"alpha"},
    "horizon": {"T"},
    "sets": {"P", "Q"},
    "initial": {"x0", "y0"},
    "partition": {"step", "nodes", "substeps"},
    "policies": {"u", "v", "u_tilde", "v_tilde"},
    "report": {"eps"},
    "output": {"csv", "meta"},
}


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text into a :class:`Scenario`.

    Every problem is reported as a :class:`ScenarioParseError` carrying the
    offending line number.
    """
    sec = _read_sections(text)
    for name, entries in sec.items():
        if name not in _KNOWN:
            line = min(ln for _, ln in entries.values()) - 1 if entries else None
            raise ScenarioParseError(f"unknown section [{name}]", line)
        for key, (_, ln) in entries.items():
            if key not in _KNOWN[name]:
                raise ScenarioParseError(f"unknown key {key!r} in [{name}]", ln)

    def get(section: str, key: str, default=None):
        entry = sec.get(section, {}).get(key)
        if entry is None:
            if default is not None:
                return default
            raise ScenarioParseError(f"missing [{section}] {key}")
        return entry

    def number(section: str, key: str, default=None) -> float:
        val, ln = get(section, key, default)
        try:
            return float(val)
        except ValueError:
            raise ScenarioParseError(f"[{section}] {key}: expected a number, got {val!r}", ln) from None

    dyn_sec = sec.get("dynamics", {})
    builtin = None
    base = None
    if "builtin" in dyn_sec:
        builtin, ln = dyn_sec["builtin"]
        if builtin not in BUILTINS:
            raise ScenarioParseError(f"unknown builtin {builtin!r}", ln)
        extra = set(dyn_sec) - {"builtin"}
        if extra:
            raise ScenarioParseError(f"builtin dynamics cannot be combined with {sorted(extra)}", dyn_sec[sorted(extra)[0]][1])
        base = BUILTINS[builtin]()
        dyn = base.dyn
    else:
        kind, ln = get("dynamics", "kind")
        if kind != "separable_affine":
            raise ScenarioParseError(f"only separable_affine dynamics can be given in a file, got {kind!r}", ln)
        drift_src, dln = get("dynamics", "drift")
        try:
            drift = ExpressionDrift([e for e in drift_src.split(";")])
        except ValueError as exc:
            raise ScenarioParseError(str(exc), dln) from None
        B = _matrix(*get("dynamics", "B"))
        C = _matrix(*get("dynamics", "C"))
        try:
            dyn = GameDynamics.separable_affine(
                drift, B, C, number("dynamics", "lambda_g"), number("dynamics", "c_g")
            )
        except ValueError as exc:
            raise ScenarioParseError(str(exc), get("dynamics", "B")[1]) from None
        if drift.dim != dyn.n:
            raise ScenarioParseError(f"drift has {drift.dim} components, B has {dyn.n} rows", dln)

    alpha = number("order", "alpha", None if base is None else (repr(base.alpha), 0))
    T = number("horizon", "T", None if base is None else (repr(base.T), 0))
    if "P" in sec.get("sets", {}) or base is None:
        P = _action_set(*get("sets", "P"))
    else:
        P = base.P
    if "Q" in sec.get("sets", {}) or base is None:
        Q = _action_set(*get("sets", "Q"))
    else:
        Q = base.Q
    x0 = _vector(*get("initial", "x0")) if "x0" in sec.get("initial", {}) or base is None else base.x0
    y0 = _vector(*get("initial", "y0")) if "y0" in sec.get("initial", {}) or base is None else base.y0

    part_sec = sec.get("partition", {})
    if "step" in part_sec and "nodes" in part_sec:
        raise ScenarioParseError("give either step or nodes, not both", part_sec["nodes"][1])
    try:
        if "nodes" in part_sec:
            partition = TimeGrid(_vector(*part_sec["nodes"]))
        elif "step" in part_sec:
            partition = TimeGrid.from_step(T, number("partition", "step"))
        elif base is not None:
            partition = TimeGrid.from_step(T, base.partition.diameter())
        else:
            raise ScenarioParseError("missing [partition] step or nodes")
    except ValueError as exc:
        if isinstance(exc, ScenarioParseError):
            raise
        line = (part_sec.get("nodes") or part_sec.get("step") or (None, None))[1]
        raise ScenarioParseError(str(exc), line) from None
    substeps_val = number("partition", "substeps", ("1", 0))
    if substeps_val != int(substeps_val) or substeps_val < 1:
        raise ScenarioParseError("substeps must be a positive integer", part_sec.get("substeps", (None, None))[1])

    pol_sec = sec.get("policies", {})
    defaults = {
        "u": Policy.extremal(),
        "v": base.v_policy if base else None,
        "u_tilde": base.u_tilde_policy if base else None,
        "v_tilde": Policy.extremal(),
    }
    policies = {}
    for key, default in defaults.items():
        if key in pol_sec:
            policies[key] = _policy(*pol_sec[key])
        elif default is not None:
            policies[key] = default
        else:
            raise ScenarioParseError(f"missing [policies] {key}")

    eps = number("report", "eps", ("0.1", 0))
    try:
        config = AimingConfig(
            dyn=dyn,
            alpha=alpha,
            T=T,
            P=P,
            Q=Q,
            x0=x0,
            y0=y0,
            partition=partition,
            u_policy=policies["u"],
            v_policy=policies["v"],
            u_tilde_policy=policies["u_tilde"],
            v_tilde_policy=policies["v_tilde"],
            substeps=int(substeps_val),
            eps=eps,
        )
    except ValueError as exc:
        raise ScenarioParseError(str(exc)) from None
    out = sec.get("output", {})
    return Scenario(
        config=config,
        csv_path=out.get("csv", (None,))[0],
        meta_path=out.get("meta", (None,))[0],
        builtin=builtin,
    )


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text)


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return " ".join(_fmt(a) for a in np.ravel(v))


def _fmt_mat(m) -> str:
    return " ; ".join(_fmt_vec(row) for row in np.atleast_2d(m))


def _fmt_set(S: ActionSet) -> str:
    if S.is_ball:
        return f"ball {_fmt(S.radius)} {S.dim}"
    return f"finite {_fmt_mat(S.points)}"


def _fmt_policy(p: Policy) -> str:
    if p.kind == "extremal":
        return "extremal"
    if p.kind == "random":
        return f"random {p.seed}"
    return f"fixed {_fmt_mat(p.values)}"


def dump_scenario(config: AimingConfig, csv_path: str | None = None, meta_path: str | None = None) -> str:
    """Serialize ``config`` so that :func:`parse_scenario` rebuilds an equal config.

    Only separable dynamics with an :class:`ExpressionDrift` can be written.
    """
    dyn = config.dyn
    if not dyn.is_separable or not isinstance(dyn.drift, ExpressionDrift):
        raise ValueError("only separable dynamics with expression drift can be serialized")
    part = config.partition
    if part.is_uniform and np.array_equal(TimeGrid.uniform(config.T, part.n_steps).nodes, part.nodes):
        partition_line = f"step = {_fmt(part.step())}"
    else:
        partition_line = f"nodes = {_fmt_vec(part.nodes)}"
    lines = [
        HEADER,
        "[dynamics]",
        "kind = separable_affine",
        f"drift = {' ; '.join(dyn.drift.exprs)}",
        f"B = {_fmt_mat(dyn.B)}",
        f"C = {_fmt_mat(dyn.C)}",
        f"lambda_g = {_fmt(dyn.lambda_g)}",
        f"c_g = {_fmt(dyn.c_g)}",
        "[order]",
        f"alpha = {_fmt(config.alpha)}",
        "[horizon]",
        f"T = {_fmt(config.T)}",
        "[sets]",
        f"P = {_fmt_set(config.P)}",
        f"Q = {_fmt_set(config.Q)}",
        "[initial]",
        f"x0 = {_fmt_vec(config.x0)}",
        f"y0 = {_fmt_vec(config.y0)}",
        "[partition]",
        partition_line,
        f"substeps = {config.substeps}",
        "[policies]",
    ]
    lines += [f"{name} = {_fmt_policy(pol)}" for name, pol in config.policies.items()]
    lines += ["[report]", f"eps = {_fmt(config.eps)}"]
    if csv_path or meta_path:
        lines.append("[output]")
        if csv_path:
            lines.append(f"csv = {csv_path}")
        if meta_path:
            lines.append(f"meta = {meta_path}")
    return "\n".join(lines) + "\n"
