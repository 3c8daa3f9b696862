"""Command-line front end.

Subcommands::

    fracguide simulate [SCENARIO | --builtin paper] [--seed N] [--step H] [--csv PATH] [--meta PATH]
    fracguide sweep    [SCENARIO | --builtin paper] --diameters 0.01,0.005 [--out PATH]
    fracguide check-lyapunov TRAJECTORY.csv [--alpha A | --meta PATH]
    fracguide constants [SCENARIO | --builtin paper] [--eps E] [--R0 R]
    fracguide selftest

Vector options take comma- or space-separated numbers.  A value that starts
with a minus sign must be attached with ``=``, e.g. ``--y0=-1,0``.

Exit status: 0 success, 1 self-test failure, 2 bad input (parse errors,
unsupported settings), 3 numeric abort, 4 inequality violation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .aiming import (
    AimingConfig,
    check_deviation_inequality,
    deviation_vs_diameter,
    run_aiming,
    theorem_constants,
)
from .errors import (
    GridError,
    MittagLefflerRangeError,
    NumericAbort,
    ScenarioParseError,
    UnsupportedCombination,
)
from .game_model import MEMBERSHIP_TOL
from .scenarios import BUILTINS, load_scenario
from .selftest import run_selftest

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_VIOLATION = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 already; keep the message short
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def _add_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", nargs="?", help="scenario file (fracguide-scenario v1)")
    p.add_argument("--builtin", choices=sorted(BUILTINS), help="use a built-in scenario")
    p.add_argument("--seed", type=int, help="reseed every random policy")
    p.add_argument("--step", type=float, help="override the uniform partition step")
    p.add_argument("--x0", type=_floats, help="override the system initial state, e.g. '-1,0'")
    p.add_argument("--y0", type=_floats, help="override the guide initial state")
    p.add_argument("--eps", type=float, help="accuracy target used in the reported bound")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracguide", description="Fractional-order guide simulations and checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run the aiming procedure and export the trajectory")
    _add_source(sim)
    sim.add_argument("--csv", help="trajectory CSV path (default: scenario output or trajectory.csv)")
    sim.add_argument("--meta", help="metadata path (default: CSV path with .meta suffix)")
    sim.add_argument("--check", action="store_true", help="also verify the deviation inequality")

    sw = sub.add_parser("sweep", help="deviation versus partition diameter")
    _add_source(sw)
    sw.add_argument("--diameters", type=_floats, required=True, help="descending list, e.g. 0.01,0.005")
    sw.add_argument("--out", help="write the delta/deviation table to this CSV")
    sw.add_argument("--workers", type=int, default=1, help="parallel runs")

    ck = sub.add_parser("check-lyapunov", help="re-verify the quadratic inequality on a stored run")
    ck.add_argument("csv", help="trajectory CSV written by simulate")
    ck.add_argument("--alpha", type=float, help="fractional order (default: read from metadata)")
    ck.add_argument("--meta", help="metadata path (default: CSV path with .meta suffix)")
    ck.add_argument("--tol", type=float, help="violation tolerance (default: C_L1 h^(1-alpha))")

    co = sub.add_parser("constants", help="print the constants of the proximity guarantee")
    _add_source(co)
    co.add_argument("--R0", type=float, help="initial-state radius (default: max of |x0|, |y0|)")
    co.add_argument("--holder", type=float, help="Holder constant to use instead of the a-priori one")

    sub.add_parser("selftest", help="run the analytic-oracle battery")
    return parser


def _config(args: argparse.Namespace) -> tuple[AimingConfig, Optional[str], Optional[str]]:
    if (args.scenario is None) == (args.builtin is None):
        raise ScenarioParseError("give exactly one of a scenario file or --builtin")
    csv_path = meta_path = None
    if args.builtin is not None:
        cfg = BUILTINS[args.builtin]()
    else:
        sc = load_scenario(args.scenario)
        cfg, csv_path, meta_path = sc.config, sc.csv_path, sc.meta_path
    try:
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.step is not None:
            cfg = cfg.with_step(args.step)
        changes = {}
        if args.x0 is not None:
            changes["x0"] = np.array(args.x0)
        if args.y0 is not None:
            changes["y0"] = np.array(args.y0)
        if args.eps is not None:
            changes["eps"] = args.eps
        if changes:
            cfg = replace(cfg, **changes)
    except ValueError as exc:
        raise ScenarioParseError(str(exc)) from None
    return cfg, csv_path, meta_path


def _invariant_failures(cfg: AimingConfig, result) -> list[str]:
    problems = []
    d0 = float(np.linalg.norm(cfg.x0 - cfg.y0))
    if result.deviation[0] != d0:
        problems.append(f"node-0 deviation {result.deviation[0]!r} != |x0 - y0| = {d0!r}")
    for name, real, S in (
        ("u", result.u_real, cfg.P),
        ("v", result.v_real, cfg.Q),
        ("u_tilde", result.u_tilde_real, cfg.P),
        ("v_tilde", result.v_tilde_real, cfg.Q),
    ):
        if not real.within(S):
            problems.append(f"{name} leaves its action set (tolerance {MEMBERSHIP_TOL})")
    return problems


def _cmd_simulate(args) -> int:
    cfg, csv_path, meta_path = _config(args)
    csv_path = Path(args.csv or csv_path or "trajectory.csv")
    meta_path = Path(args.meta or meta_path or csv_path.with_suffix(".meta"))
    result = run_aiming(cfg)
    io.write_trajectory_csv(csv_path, result)
    io.write_meta(meta_path, io.run_metadata(cfg, result, csv_path.name))
    print(f"wrote {csv_path} ({result.grid.size} rows) and {meta_path}")
    print(f"deviation_sup = {io.fmt(result.deviation_sup)}")
    print(f"deviation_final = {io.fmt(result.deviation[-1])}")
    print(f"K = {io.fmt(result.K)}")
    print(f"bound_rhs = {io.fmt(result.bound_rhs)}  (eps + K |x0 - y0|, reported only)")
    print(f"seed = {result.seed}")
    problems = _invariant_failures(cfg, result)
    if args.check:
        rep = check_deviation_inequality(result, cfg.alpha)
        print(f"deviation inequality: {rep.summary()}")
        if rep.violated:
            problems.append("deviation inequality violated beyond tolerance")
    for p in problems:
        print(f"invariant violated: {p}", file=sys.stderr)
    return EXIT_VIOLATION if problems else EXIT_OK


def _cmd_sweep(args) -> int:
    cfg, _, _ = _config(args)
    try:
        rows = deviation_vs_diameter(cfg, args.diameters, workers=args.workers)
    except GridError:
        raise
    except ValueError as exc:
        raise ScenarioParseError(str(exc)) from None
    lines = ["delta,deviation_sup"] + [f"{io.fmt(r['delta'])},{io.fmt(r['deviation_sup'])}" for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_check(args) -> int:
    try:
        data = io.read_trajectory_csv(args.csv)
    except (OSError, ValueError, KeyError) as exc:
        raise ScenarioParseError(f"cannot read trajectory {args.csv}: {exc}") from None
    alpha = args.alpha
    if alpha is None:
        meta_path = Path(args.meta) if args.meta else Path(args.csv).with_suffix(".meta")
        try:
            alpha = float(io.read_meta(meta_path)["alpha"])
        except (OSError, KeyError, ValueError):
            raise ScenarioParseError(f"no alpha given and none readable from {meta_path}") from None
    x, y = data["x"], data["y"]
    s = type(x)(x.grid, x.values - y.values)
    rep = check_deviation_inequality(s, alpha, args.tol)
    print(rep.summary())
    dev_err = float(np.max(np.abs(data["dev"] - np.linalg.norm(s.values, axis=1))))
    print(f"dev column mismatch = {io.fmt(dev_err)}")
    failed = rep.violated or dev_err > 1e-9
    print("FAIL" if failed else "OK")
    return EXIT_VIOLATION if failed else EXIT_OK


def _cmd_constants(args) -> int:
    cfg, _, _ = _config(args)
    R0 = args.R0 if args.R0 is not None else float(max(np.linalg.norm(cfg.x0), np.linalg.norm(cfg.y0)))
    c = theorem_constants(cfg.dyn, cfg.alpha, cfg.T, R0, cfg.eps, holder=args.holder)
    d0 = float(np.linalg.norm(cfg.x0 - cfg.y0))
    print(f"alpha = {io.fmt(cfg.alpha)}")
    print(f"T = {io.fmt(cfg.T)}")
    print(f"lambda_g = {io.fmt(cfg.dyn.lambda_g)}")
    print(f"c_g = {io.fmt(cfg.dyn.c_g)}")
    print(f"R0 = {io.fmt(R0)}")
    print(f"eps = {io.fmt(c.eps)}")
    print(f"K = {repr(c.K)}")
    print(f"eta = {repr(c.eta)}")
    print(f"R_bar = {repr(c.R_bar)}")
    print(f"H_bar = {repr(c.H_bar)} ({c.holder_source})")
    print(f"delta2 = {repr(c.delta2)}")
    print(f"delta1 = {'undeclared' if c.delta1 is None else repr(c.delta1)}")
    print(f"delta = {'undeclared' if c.delta is None else repr(c.delta)}")
    print(f"bound_rhs = {repr(c.eps + c.K * d0)}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    failures = 0
    for name, ok, detail in run_selftest():
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"{failures} failure(s)")
    return EXIT_SELFTEST if failures else EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "check-lyapunov": _cmd_check,
    "constants": _cmd_constants,
    "selftest": _cmd_selftest,
}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit status (argparse errors exit 2 directly)."""
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (UnsupportedCombination, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericAbort as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MittagLefflerRangeError as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run_cli())
