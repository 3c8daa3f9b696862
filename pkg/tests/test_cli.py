import csv
import subprocess
import sys

import numpy as np
import pytest

from fracguide.aiming import theorem_constants
from fracguide.cli import run_cli
from fracguide.io import read_meta, read_trajectory_csv, trajectory_header
from fracguide.scenarios import dump_scenario, scenario_paper_example


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def simulate(*extra):
    return run_cli(["simulate", "--builtin", "paper", *extra])


def test_simulate_builtin_writes_csv_and_meta(workdir, capsys):
    assert simulate("--seed", "42") == 0
    rows = list(csv.reader(open(workdir / "trajectory.csv")))
    assert rows[0] == trajectory_header(2, 2, 2)
    assert len(rows) - 1 == 10001
    meta = read_meta(workdir / "trajectory.meta")
    assert meta["seed"] == "42" and meta["nodes"] == "10001" and meta["alpha"] == "0.5"
    for key in ("deviation_sup", "K", "bound_rhs", "eps"):
        assert float(meta[key]) > 0
    out = capsys.readouterr().out
    assert "deviation_sup = 1.41421356237" in out


def test_csv_formatting_and_dev_column(workdir):
    assert simulate("--seed", "3", "--step", "0.01", "--csv", "r.csv") == 0
    text = (workdir / "r.csv").read_text()
    for line in text.splitlines()[1:]:
        for cell in line.split(","):
            assert cell == format(float(cell), ".12g")
    data = read_trajectory_csv(workdir / "r.csv")
    s = data["x"].values - data["y"].values
    np.testing.assert_allclose(data["dev"], np.linalg.norm(s, axis=1), atol=1e-9, rtol=0)
    assert (workdir / "r.meta").exists()


def test_controls_in_last_row_repeat_last_cell(workdir):
    assert simulate("--seed", "1", "--step", "0.5", "--csv", "c.csv") == 0
    data = read_trajectory_csv(workdir / "c.csv")["data"]
    np.testing.assert_array_equal(data[-1, 5:13], data[-2, 5:13])


def test_simulate_is_byte_identical(workdir):
    assert simulate("--seed", "42", "--step", "0.005", "--csv", "a.csv") == 0
    assert simulate("--seed", "42", "--step", "0.005", "--csv", "b.csv") == 0
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()


def test_simulate_with_check_and_overrides(workdir, capsys):
    assert simulate("--seed", "2", "--step", "0.01", "--y0=-1,0", "--eps", "0.5", "--check") == 0
    out = capsys.readouterr().out
    assert "deviation inequality: ok" in out
    meta = read_meta(workdir / "trajectory.meta")
    assert meta["y0"] == "-1 0" and meta["eps"] == "0.5"


def test_simulate_scenario_file_uses_its_output_paths(workdir):
    cfg = scenario_paper_example(seed=5).with_step(0.01)
    (workdir / "s.scn").write_text(dump_scenario(cfg, "out.csv", "out.meta"))
    assert run_cli(["simulate", "s.scn"]) == 0
    assert (workdir / "out.csv").exists() and (workdir / "out.meta").exists()


def test_check_lyapunov_round_trip(workdir, capsys):
    assert simulate("--seed", "4", "--step", "0.005", "--csv", "r.csv") == 0
    assert run_cli(["check-lyapunov", "r.csv"]) == 0
    assert capsys.readouterr().out.strip().endswith("OK")
    assert run_cli(["check-lyapunov", "r.csv", "--alpha", "0.5", "--tol", "-1"]) == 4


def test_check_lyapunov_detects_tampered_dev_column(workdir):
    assert simulate("--seed", "4", "--step", "0.05", "--csv", "r.csv") == 0
    lines = (workdir / "r.csv").read_text().splitlines()
    cells = lines[5].split(",")
    cells[-1] = "9"
    lines[5] = ",".join(cells)
    (workdir / "r.csv").write_text("\n".join(lines) + "\n")
    assert run_cli(["check-lyapunov", "r.csv"]) == 4


def test_check_lyapunov_needs_alpha(workdir):
    assert simulate("--seed", "4", "--step", "0.05", "--csv", "r.csv") == 0
    (workdir / "r.meta").unlink()
    assert run_cli(["check-lyapunov", "r.csv"]) == 2
    assert run_cli(["check-lyapunov", "r.csv", "--alpha", "0.5"]) == 0
    assert run_cli(["check-lyapunov", "missing.csv", "--alpha", "0.5"]) == 2


def test_constants_pass_through(capsys):
    assert run_cli(["constants", "--builtin", "paper", "--eps", "0.1"]) == 0
    out = dict(line.split(" = ", 1) for line in capsys.readouterr().out.splitlines())
    cfg = scenario_paper_example()
    ref = theorem_constants(cfg.dyn, 0.5, 5.0, R0=1.0, eps=0.1)
    assert float(out["K"]) == pytest.approx(ref.K, rel=1e-9)
    assert float(out["eta"]) == pytest.approx(ref.eta, rel=1e-9)
    assert out["delta1"] == "undeclared"


def test_sweep_table(workdir, capsys):
    code = run_cli(["sweep", "--builtin", "paper", "--seed", "1", "--y0=-1,0",
                    "--diameters", "0.05,0.02", "--out", "sweep.csv", "--workers", "2"])
    assert code == 0
    rows = list(csv.reader(open(workdir / "sweep.csv")))
    assert rows[0] == ["delta", "deviation_sup"]
    assert [float(r[0]) for r in rows[1:]] == [0.05, 0.02]
    assert run_cli(["sweep", "--builtin", "paper", "--diameters", "0.01,0.05"]) == 2


def test_selftest(capsys):
    assert run_cli(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 8


# --- exit-code contract ------------------------------------------------------------


def test_malformed_scenario_exits_2(workdir, capsys):
    (workdir / "bad.scn").write_text("fracguide-scenario v1\n[dynamics]\nbuiltin = paper\n[order]\nalpha = zero\n")
    assert run_cli(["simulate", "bad.scn"]) == 2
    assert "line 5" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [["simulate"], ["simulate", "x.scn", "--builtin", "paper"], ["simulate", "missing.scn"],
     ["simulate", "--builtin", "paper", "--step", "0.3"], ["simulate", "--builtin", "paper", "--x0", "1,2,3"]],
)
def test_bad_inputs_exit_2(workdir, argv):
    assert run_cli(argv) == 2


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["simulate", "--builtin", "nope"], ["sweep", "--builtin", "paper"]])
def test_argparse_errors_exit_2(argv):
    with pytest.raises(SystemExit) as info:
        run_cli(argv)
    assert info.value.code == 2


def test_nan_dynamics_exit_3(workdir, capsys):
    text = dump_scenario(scenario_paper_example().with_step(0.5)).replace("drift = x2 ; -sin(x1) + cos(t)",
                                                                          "drift = x1 * x1 ; x2")
    text = text.replace("x0 = -1.0 0.0", "x0 = 1e200 0.0")
    (workdir / "nan.scn").write_text(text)
    assert run_cli(["simulate", "nan.scn"]) == 3
    assert "numeric abort" in capsys.readouterr().err


def test_module_entry_point(workdir):
    proc = subprocess.run([sys.executable, "-m", "fracguide", "constants", "--builtin", "paper"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "K = 31150.12" in proc.stdout
