import json
import sys
from pathlib import Path
from typing import Callable

import pandas as pd
import pytest

from tests import Command, Environment, ProcessResult

pytestmark = [pytest.mark.slow]

CMD = [sys.executable, "-m", "sdde_stab.cli.main", "preset"]


@pytest.fixture(scope="module")
def output_dir(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("presets")


@pytest.fixture(scope="module")
def roots_process(run_process: Callable[[Command, Environment], ProcessResult], output_dir: Path) -> ProcessResult:
    return run_process(CMD + ["roots", "--output-dir", (output_dir / "roots").as_posix()], {})


@pytest.fixture(scope="module")
def instability_process(run_process: Callable[[Command, Environment], ProcessResult], output_dir: Path) -> ProcessResult:
    return run_process(CMD + ["prop41", "--output-dir", (output_dir / "instability").as_posix()], {})


@pytest.fixture(scope="module")
def stability_process(run_process: Callable[[Command, Environment], ProcessResult], output_dir: Path) -> ProcessResult:
    args = ["prop42", "@", "configs/preset/stability_fast.toml", "--horizon", "100"]
    return run_process(CMD + args + ["--output-dir", (output_dir / "stability").as_posix()], {})


@pytest.fixture(scope="module")
def attract_process(run_process: Callable[[Command, Environment], ProcessResult], output_dir: Path) -> ProcessResult:
    args = ["attract", "--horizon", "10", "--integrator.step", "0.01"]
    return run_process(CMD + args + ["--output-dir", (output_dir / "attract").as_posix()], {})


def test_roots_no_error(roots_process: ProcessResult):
    assert roots_process.returncode == 0, f"Roots preset failed with return code {roots_process.returncode}"


def test_roots_zero_multiplicity(roots_process: ProcessResult, output_dir: Path):
    with open(output_dir / "roots" / "roots.json") as f:
        zero = {entry["a"]: entry for entry in json.load(f)["zero_root"]}
    assert zero[1.0]["winding_at_zero"] == 2
    assert zero[0.5]["winding_at_zero"] == 1
    assert zero[2.0]["winding_at_zero"] == 1
    assert zero[0.5]["kappa"] < 0 < zero[2.0]["kappa"]
    assert zero[1.0]["kappa"] is None


@pytest.mark.parametrize("a, n_unstable", [("0.5", 0), ("2", 1)])
def test_roots_unstable_part(roots_process: ProcessResult, output_dir: Path, a: str, n_unstable: int):
    df = pd.read_csv(output_dir / "roots" / f"roots_a={a}.csv")
    assert (df["class"] == "unstable").sum() == n_unstable
    center = df[df["class"] == "center"]
    assert len(center) == 1 and center["multiplicity"].iloc[0] == 1


def test_instability_no_error(instability_process: ProcessResult):
    assert instability_process.returncode == 0, f"Instability preset failed with return code {instability_process.returncode}"


def test_instability_growth(instability_process: ProcessResult, output_dir: Path):
    with open(output_dir / "instability" / "growth.json") as f:
        growth = json.load(f)
    assert growth["verdict"] == "UNSTABLE_LINEAR"
    assert growth["relative_error"] < 0.1
    assert growth["escape_time"] < 20.0


def test_stability_no_error(stability_process: ProcessResult):
    assert stability_process.returncode == 0, f"Stability preset failed with return code {stability_process.returncode}"


def test_stability_outputs(stability_process: ProcessResult, output_dir: Path):
    with open(output_dir / "stability" / "verdict.json") as f:
        verdict = json.load(f)
    assert verdict["verdict"] == "ASYMPTOTICALLY_STABLE_REDUCED"
    assert (output_dir / "stability" / "fit.json").exists()
    with open(output_dir / "stability" / "decay.json") as f:
        decay = json.load(f)
    assert decay["mean_tx"] == pytest.approx(decay["limit"], abs=0.1)
    df = pd.read_csv(output_dir / "stability" / "decay.csv")
    assert df["t"].iloc[0] == pytest.approx(50.0)


def test_attract_no_error(attract_process: ProcessResult):
    assert attract_process.returncode == 0, f"Attract preset failed with return code {attract_process.returncode}"


def test_attract_rate(attract_process: ProcessResult, output_dir: Path):
    with open(output_dir / "attract" / "attraction.json") as f:
        report = json.load(f)
    assert report["rate"] == pytest.approx(abs(report["kappa"]), rel=0.25)
    assert report["r2"] > 0.95
