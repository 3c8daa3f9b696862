"""Reproduce the two frozen calibration numbers used by the acceptance suite.

1. Equal-start threshold: the largest deviation_sup of the built-in example
   with x0 = y0 = (-1, 0), step 0.0005, seeds 0-9.
2. The L1 tolerance constant: the largest L1 error at t = 1 on the power
   cases, scaled by h^(1 - alpha).

Run with ``python3 tools/calibrate.py``.
"""

from dataclasses import replace
from math import gamma


from fracguide.aiming import run_aiming
from fracguide.frac_core import GridFunction, TimeGrid, caputo_derivative_l1
from fracguide.scenarios import scenario_paper_example


def equal_start_sups():
    out = []
    for seed in range(10):
        cfg = scenario_paper_example(seed=seed)
        cfg = replace(cfg, y0=cfg.x0.copy())
        out.append(run_aiming(cfg).deviation_sup)
    return out


def l1_constant():
    worst = 0.0
    for alpha in (0.25, 0.5, 0.75):
        for beta in (0.5, 1.0, 2.0):
            exact = gamma(beta + 1) / gamma(beta + 1 - alpha)
            for n in (256, 512, 1024, 2048):
                g = TimeGrid.uniform(1.0, n)
                val = caputo_derivative_l1(alpha, GridFunction(g, g.nodes**beta)).values[-1, 0]
                worst = max(worst, abs(val - exact) / (1.0 / n) ** (1 - alpha))
    return worst


if __name__ == "__main__":
    sups = equal_start_sups()
    print("equal-start deviation_sup per seed:", " ".join(f"{s:.4f}" for s in sups))
    print(f"largest: {max(sups):.4f}  (frozen threshold 0.05)")
    print(f"largest scaled L1 error: {l1_constant():.3e}  (frozen C_L1 = 3e-3)")
