"""Acceptance criteria 1-7, one test per criterion.

Each test records a one-line PASS/FAIL verdict.  The lines are printed as a
summary section at the end of every pytest run (see ``conftest.py``) and when
this file is executed directly.
"""

from __future__ import annotations

import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import caputo_power, example_system_trajectory, ml_half, ml_series, rl_power
from fracguide.cli import run_cli
from fracguide.frac_core import (
    GridFunction,
    TimeGrid,
    caputo_derivative_l1,
    empirical_orders,
    gamma_fn,
    mittag_leffler,
    rl_integral,
)
from fracguide.fde_solver import CauchyProblem, RhsFunction, solve_euler
from fracguide.game_model import ActionSet, GameDynamics, check_saddle, extremal_u, extremal_v
from fracguide.io import read_meta, read_trajectory_csv
from fracguide.lyapunov_check import (
    C_L1,
    check_convex_inequality,
    check_quadratic_inequality,
    log_sum_exp,
    quadratic,
    quartic_regularized,
)

RESULTS: list[str] = []

# Calibration run (seeds 0-9, step 0.0005, x0 = y0 = (-1, 0)): largest
# deviation_sup was 0.0376.  The threshold is frozen at 0.05.
EQUAL_START_THRESHOLD = 0.05
EXACT = 1e-13


def verdict(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# --- 1 ---------------------------------------------------------------------------


def test_criterion_1_special_functions():
    start = time.perf_counter()
    gamma_err = max(
        abs(gamma_fn(z) / ref - 1) for z, ref in ((1.0, 1.0), (0.5, math.sqrt(math.pi)), (5.0, 24.0))
    )
    z = np.linspace(-5, 5, 101)
    ml_err = float(np.max(np.abs(mittag_leffler(1.0, z) / np.exp(z) - 1)))
    elapsed = time.perf_counter() - start
    ok = gamma_err <= 1e-12 and ml_err <= 1e-9 and elapsed < 1.0
    verdict(1, "special functions", ok,
            f"gamma rel err {gamma_err:.1e}, E_1 vs exp rel err {ml_err:.1e}, {elapsed:.2f} s")


# --- 2 ---------------------------------------------------------------------------


def _orders(errors, steps):
    """Empirical orders; a level whose error is at rounding counts as exact."""
    errs = np.asarray(errors)
    if np.all(errs < EXACT):
        return np.array([np.inf])
    return empirical_orders(steps, np.maximum(errs, EXACT))


def test_criterion_2_power_rule_battery():
    # errors are measured at t = 1; the sup over all nodes is dominated by the
    # t -> 0 singularity of t^(beta - alpha) and does not converge for beta < alpha
    start = time.perf_counter()
    ns = (256, 512, 1024, 2048)
    steps = [1.0 / n for n in ns]
    worst_int, worst_l1 = np.inf, np.inf
    failures = []
    for alpha in (0.25, 0.5, 0.75):
        for beta in (0.0, 0.5, 1.0, 2.0):
            e_int, e_l1 = [], []
            for n in ns:
                g = TimeGrid.uniform(1.0, n)
                f = GridFunction(g, g.nodes**beta)
                e_int.append(abs(rl_integral(alpha, f).values[-1, 0] - rl_power(beta, alpha, 1.0)))
                exact_d = 0.0 if beta == 0.0 else caputo_power(beta, alpha, 1.0)
                e_l1.append(abs(caputo_derivative_l1(alpha, f).values[-1, 0] - exact_d))
            o_int, o_l1 = _orders(e_int, steps).min(), _orders(e_l1, steps).min()
            worst_int, worst_l1 = min(worst_int, o_int), min(worst_l1, o_l1 - (1 - alpha - 0.1))
            if o_int < 0.9:
                failures.append(f"integral alpha={alpha} beta={beta} order {o_int:.2f}")
            if o_l1 < 1 - alpha - 0.1:
                failures.append(f"L1 alpha={alpha} beta={beta} order {o_l1:.2f}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 10.0
    detail = (f"min integral order {worst_int:.3f} (need 0.9), min L1 order surplus {worst_l1:.3f} "
              f"over 1-alpha-0.1, {elapsed:.2f} s")
    verdict(2, "power-rule battery", ok, detail if not failures else "; ".join(failures))


# --- 3 ---------------------------------------------------------------------------


def test_criterion_3_solver_convergence():
    start = time.perf_counter()
    prob = CauchyProblem(RhsFunction(lambda t, x: x, dim=1, c_f=1.0, lambda_f=1.0), 0.5, [1.0], 1.0)
    errs = {}
    for n in (1024, 2048, 4096):
        x = solve_euler(prob, TimeGrid.uniform(1.0, n))
        exact = ml_half(np.sqrt(x.grid.nodes))
        errs[n] = float(np.max(np.abs(x.values[:, 0] - exact) / exact))
    # the closed form agrees with the plain series at the end point
    series_gap = abs(float(ml_half(1.0)) / ml_series(0.5, 1.0) - 1)
    elapsed = time.perf_counter() - start
    ratios = [errs[1024] / errs[2048], errs[2048] / errs[4096]]
    ok = errs[4096] <= 0.02 and all(r >= 2.0 for r in ratios) and series_gap < 1e-13 and elapsed < 5.0
    verdict(3, "solver convergence", ok,
            f"sup rel err {errs[4096]:.2e} at N=4096, halving ratios {ratios[0]:.3f} {ratios[1]:.3f}, "
            f"{elapsed:.2f} s")


# --- 4 ---------------------------------------------------------------------------


def _planar(g, first):
    return GridFunction(g, np.column_stack([first, np.zeros(g.size)]))


def test_criterion_4_lyapunov_suite():
    start = time.perf_counter()
    reports = []
    g = TimeGrid.uniform(1.0, 4096)
    reports.append(("zero", check_quadratic_inequality(GridFunction(g, np.zeros((g.size, 2))), 0.5)))
    reports.append(("zero convex", check_convex_inequality(quadratic(), GridFunction(g, np.zeros((g.size, 2))), 0.5)))
    reports.append(("(t, 0)", check_convex_inequality(quadratic(), _planar(g, g.nodes), 0.5)))
    reports.append(("(t^0.7, 0)", check_quadratic_inequality(_planar(g, g.nodes**0.7), 0.5)))
    g2 = TimeGrid.uniform(2.0, 8192)
    reports.append(("(sin 5t, 0)", check_quadratic_inequality(_planar(g2, np.sin(5 * g2.nodes)), 0.5)))
    battery = (quadratic(), log_sum_exp(2), quartic_regularized())
    for seed in range(20):
        x = example_system_trajectory(seed, n_steps=2048)
        reports.append((f"seed {seed}", check_quadratic_inequality(x, 0.5, shift=True)))
        for V in battery:
            reports.append((f"seed {seed} {V.name}", check_convex_inequality(V, x, 0.5, shift=True)))
    elapsed = time.perf_counter() - start
    bad = [name for name, rep in reports if rep.violated]
    worst = max(rep.max_violation / rep.tolerance_used for _, rep in reports)
    ok = not bad and elapsed < 30.0
    verdict(4, "Lyapunov inequality suite", ok,
            f"{len(reports)} reports, C_L1={C_L1:g}, worst violation/tol {worst:.3g}, {elapsed:.2f} s"
            + (f", violated: {bad}" if bad else ""))


# --- 5 ---------------------------------------------------------------------------


def _simulate(tmp: Path, name: str, *args: str) -> dict:
    csv_path = tmp / f"{name}.csv"
    code = run_cli(["simulate", "--builtin", "paper", "--csv", str(csv_path), *args])
    assert code == 0
    return read_meta(csv_path.with_suffix(".meta"))


def test_criterion_5_example_reproduction(tmp_path, capsys):
    start = time.perf_counter()
    sups, bounds, equal_sups = [], [], []
    for seed in range(10):
        meta = _simulate(tmp_path, f"offset{seed}", "--seed", str(seed))
        sups.append(float(meta["deviation_sup"]))
        bounds.append(float(meta["bound_rhs"]))
        meta = _simulate(tmp_path, f"equal{seed}", "--seed", str(seed), "--y0=-1,0")
        equal_sups.append(float(meta["deviation_sup"]))
    sweep_csv = tmp_path / "sweep.csv"
    assert run_cli(["sweep", "--builtin", "paper", "--seed", "42", "--diameters",
                    "0.01,0.005,0.001,0.0005", "--out", str(sweep_csv), "--workers", "4"]) == 0
    rows = list(csv.DictReader(open(sweep_csv)))
    sweep = [float(r["deviation_sup"]) for r in rows]
    capsys.readouterr()
    elapsed = time.perf_counter() - start

    # the formal bound is reported, never gated: it is too loose to be informative
    bounded = all(math.isfinite(s) for s in sups)
    equal_ok = max(equal_sups) <= EQUAL_START_THRESHOLD
    monotone = all(b <= 1.1 * a for a, b in zip(sweep, sweep[1:]))
    ok = bounded and equal_ok and monotone and elapsed < 300
    verdict(5, "example reproduction", ok,
            f"offset max sup {max(sups):.4f} (formal bound {bounds[0]:.5g}, reported only), "
            f"x0=y0 max sup {max(equal_sups):.4f} <= {EQUAL_START_THRESHOLD}, "
            f"sweep {[round(s, 5) for s in sweep]}, {elapsed:.1f} s")


# --- 6 ---------------------------------------------------------------------------


def test_criterion_6_saddle_and_selectors():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    F4 = ActionSet.finite(np.eye(4))
    min_gap, max_sep_gap = np.inf, 0.0
    for i in range(1000):
        s, x = rng.standard_normal(2), rng.standard_normal(2)
        if i % 2 == 0:
            M = rng.standard_normal((4, 4))
            dyn = GameDynamics.blackbox(lambda t, x, u, v, M=M: np.array([u @ M @ v, 0.0]),
                                        n=2, n_u=4, n_v=4, lambda_g=1.0, c_g=1.0)
            gap = check_saddle(dyn, 0.0, x, s, F4, F4).gap
        else:
            A = rng.standard_normal((2, 2))
            dyn = GameDynamics.separable_affine(lambda t, x, A=A: A @ x, rng.standard_normal((2, 2)),
                                                rng.standard_normal((2, 2)), lambda_g=2.0, c_g=2.0)
            P = ActionSet.ball(rng.uniform(0.1, 3), 2)
            Q = ActionSet.ball(rng.uniform(0.1, 3), 2)
            gap = check_saddle(dyn, rng.uniform(0, 5), x, s, P, Q).gap
            max_sep_gap = max(max_sep_gap, abs(gap))
        min_gap = min(min_gap, gap)
    scale_err = 0.0
    for i in range(1000):
        s, x = rng.standard_normal(2), rng.standard_normal(2)
        c = float(np.exp(rng.uniform(-7, 7)))
        dyn = GameDynamics.separable_affine(lambda t, x: x, rng.standard_normal((2, 2)),
                                            rng.standard_normal((2, 2)), lambda_g=1.0, c_g=4.0)
        if i % 2 == 0:
            P, Q = ActionSet.ball(1.0, 2), ActionSet.ball(2.0, 2)
        else:
            P, Q = ActionSet.finite(rng.standard_normal((5, 2))), ActionSet.finite(rng.standard_normal((5, 2)))
        for fn in (extremal_u, extremal_v):
            scale_err = max(scale_err, float(np.max(np.abs(fn(dyn, 0.0, x, s, P, Q) - fn(dyn, 0.0, x, c * s, P, Q)))))
    elapsed = time.perf_counter() - start
    ok = min_gap >= -1e-12 and max_sep_gap <= 1e-12 and scale_err <= 1e-12 and elapsed < 5.0
    verdict(6, "saddle and selector properties", ok,
            f"min gap {min_gap:.2e}, max separable |gap| {max_sep_gap:.1e}, "
            f"scaling mismatch {scale_err:.1e}, {elapsed:.2f} s")


# --- 7 ---------------------------------------------------------------------------


def test_criterion_7_determinism(tmp_path, capsys):
    paths = [tmp_path / "first.csv", tmp_path / "second.csv"]
    for p in paths:
        assert run_cli(["simulate", "--builtin", "paper", "--seed", "42", "--csv", str(p)]) == 0
    capsys.readouterr()
    a, b = (p.read_bytes() for p in paths)
    rows = read_trajectory_csv(paths[0])["data"].shape[0]
    verdict(7, "determinism", a == b and rows == 10001,
            f"{len(a)} bytes, {rows} rows, identical={a == b}")


if __name__ == "__main__":
    import sys

    raise SystemExit(pytest.main([__file__, "-q", *sys.argv[1:]]))
