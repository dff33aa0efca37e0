import json

import numpy as np
import pandas as pd
import pytest

from sdde_stab.cli.commands import PRESETS, preset_instability, preset_stability
from sdde_stab.cli.main import run
from sdde_stab.cli.sweep import SWEEP_COLUMNS
from sdde_stab.model import Model, make_admissible
from sdde_stab.segment import Segment
from sdde_stab.utils.utils import EXIT_NUMERICAL, EXIT_OK, EXIT_PRECONDITION


@pytest.mark.parametrize("argv", [[], ["train"], ["preset"], ["preset", "bifurcation"]])
def test_unknown_command(argv):
    assert run(argv) == EXIT_PRECONDITION


def test_help():
    assert run(["simulate", "--help"]) == EXIT_OK


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--a", "-1"],
        ["simulate", "--no-such-flag", "1"],
        ["simulate", "@", "configs/simulate/missing.toml"],
        ["sweep", "--a-values", "[0.5,1.0]"],
    ],
)
def test_invalid_configuration(argv, tmp_path):
    assert run(argv + ["--output-dir", str(tmp_path)]) == EXIT_PRECONDITION


def test_unwritable_output_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.touch()
    assert run(["simulate", "--eps", "0", "--horizon", "1", "--output-dir", str(blocker / "out")]) == EXIT_PRECONDITION


def test_spectrum_double_root(tmp_path):
    argv = ["spectrum", "--a", "1", "--window", "[-0.5,0.5,-0.5,0.5]", "--output-dir", str(tmp_path)]
    assert run(argv) == EXIT_OK
    df = pd.read_csv(tmp_path / "roots.csv")
    assert len(df) == 1
    assert df["class"].iloc[0] == "center"
    assert df["multiplicity"].iloc[0] == 2


def test_simulate_zero_solution(tmp_path):
    argv = ["simulate", "--eps", "0", "--horizon", "1", "--stride", "0.1", "--output-dir", str(tmp_path)]
    assert run(argv) == EXIT_OK
    df = pd.read_csv(tmp_path / "trajectory.csv")
    assert list(df.columns) == ["t", "x", "xprime"]
    assert df["t"].iloc[0] == 0.0
    assert df["t"].iloc[-1] == pytest.approx(1.0)
    assert np.all(df["x"] == 0.0)


def test_simulate_from_initial_file(tmp_path, stable_model: Model):
    path = tmp_path / "phi.csv"
    make_admissible(stable_model, 0.05).to_csv(path)
    argv = ["simulate", "--initial", str(path), "--horizon", "1", "--integrator.step", "0.01"]
    assert run(argv + ["--output-dir", str(tmp_path)]) == EXIT_OK
    df = pd.read_csv(tmp_path / "trajectory.csv")
    assert df["x"].iloc[0] == pytest.approx(0.05)


def test_simulate_inadmissible_initial_file(tmp_path):
    path = tmp_path / "phi.csv"
    Segment.constant(0.1).to_csv(path)
    assert run(["simulate", "--initial", str(path), "--output-dir", str(tmp_path)]) == EXIT_PRECONDITION
    missing = tmp_path / "missing.csv"
    assert run(["simulate", "--initial", str(missing), "--output-dir", str(tmp_path)]) == EXIT_PRECONDITION


def test_reduce_fit_failure(tmp_path):
    argv = ["reduce", "--reduction.horizon", "3", "--reduction.eps-values", "[0.1]", "--integrator.step", "0.01"]
    assert run(argv + ["--output-dir", str(tmp_path)]) == EXIT_NUMERICAL
    assert not (tmp_path / "fit.json").exists()


def test_classify_unstable(tmp_path):
    assert run(["classify", "@", "configs/classify/unstable.toml", "--output-dir", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "verdict.json") as f:
        verdict = json.load(f)
    assert verdict["verdict"] == "UNSTABLE_LINEAR"
    assert verdict["kappa"] == pytest.approx(1.5936, abs=1e-4)
    assert verdict["reduced"] is None


def test_empty_sweep(tmp_path):
    assert run(["sweep", "--output-dir", str(tmp_path)]) == EXIT_OK
    df = pd.read_csv(tmp_path / "sweep.csv")
    assert list(df.columns) == SWEEP_COLUMNS
    assert len(df) == 0


def test_spectrum_sweep(tmp_path):
    argv = ["sweep", "--a-values", "[0.5,2.0]", "--task", "spectrum", "--window", "[-0.5,2.0,-0.5,0.5]"]
    assert run(argv + ["--output-dir", str(tmp_path)]) == EXIT_OK
    df = pd.read_csv(tmp_path / "sweep.csv")
    assert df["a"].tolist() == [0.5, 2.0]
    assert df["n_unstable"].tolist() == [0, 1]
    assert df["kappa"].tolist() == pytest.approx([-1.2564, 1.5936], abs=1e-4)
    assert df["error"].isna().all()


@pytest.mark.parametrize("name", ["prop42", "stability"])
def test_preset_reduced_stability(name, tmp_path):
    argv = ["preset", name, "--a", "0.5", "--eps", "0.1", "--horizon", "60", "--integrator.step", "0.01"]
    argv += ["--reduction.horizon", "60", "--reduction.eps-values", "[0.1]", "--output-dir", str(tmp_path)]
    assert run(argv) == EXIT_OK
    with open(tmp_path / "verdict.json") as f:
        verdict = json.load(f)
    assert verdict["verdict"] == "ASYMPTOTICALLY_STABLE_REDUCED"
    assert (tmp_path / "fit.json").exists()
    df = pd.read_csv(tmp_path / "decay.csv")
    assert list(df.columns) == ["t", "x", "tx"]
    assert df["t"].iloc[0] == pytest.approx(30.0)
    with open(tmp_path / "decay.json") as f:
        decay = json.load(f)
    assert decay["limit"] == pytest.approx(0.5)
    assert decay["power_exponent"] < 0


def test_preset_names():
    assert set(PRESETS) == {"prop41", "prop42", "instability", "stability", "roots", "reduce", "attract"}
    assert PRESETS["prop41"] is PRESETS["instability"] is preset_instability
    assert PRESETS["prop42"] is PRESETS["stability"] is preset_stability


def test_sweep_jobs_match_serial(tmp_path):
    argv = ["sweep", "--a-values", "[0.5,2.0,3.0]", "--task", "spectrum", "--window", "[-0.5,3.0,-0.5,0.5]"]
    assert run(argv + ["--jobs", "1", "--output-dir", str(tmp_path / "serial")]) == EXIT_OK
    assert run(argv + ["--jobs", "2", "--output-dir", str(tmp_path / "parallel")]) == EXIT_OK
    serial = (tmp_path / "serial" / "sweep.csv").read_bytes()
    assert (tmp_path / "parallel" / "sweep.csv").read_bytes() == serial
    assert pd.read_csv(tmp_path / "serial" / "sweep.csv")["a"].tolist() == [0.5, 2.0, 3.0]


def test_simulate_is_deterministic(tmp_path):
    argv = ["simulate", "--a", "0.5", "--eps", "0.1", "--horizon", "5", "--integrator.step", "0.01"]
    for name in ["first", "second"]:
        assert run(argv + ["--output-dir", str(tmp_path / name)]) == EXIT_OK
    first = (tmp_path / "first" / "trajectory.csv").read_bytes()
    assert len(first) > 0
    assert (tmp_path / "second" / "trajectory.csv").read_bytes() == first
