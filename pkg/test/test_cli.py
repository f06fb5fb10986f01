import json
import os
import os.path
from pathlib import Path
from tempfile import TemporaryDirectory
from typing import Any

import numpy as np
import pytest

from nullfrenet.__main__ import main
from nullfrenet.cli import cmd_verify, exit_code, ExitCode, sweep
from nullfrenet.config import parse_config
from nullfrenet.error import (
    BlowUpError,
    ConfigError,
    DegenerateCurveError,
    FrameExtractionError,
)
from nullfrenet.output import read_csv
from nullfrenet.variation import omega


DIR = os.path.dirname(__file__)
PREFIX = "test_cli-"

HELIX = {
    "mode": "helix",
    "dimension": 4,
    "helix": {"kappa1": -0.5, "kappa2": 0.0},
    "integrator": {"h": 0.01, "sigma_max": 1.0},
    "io": {"output_dir": "out"},
}

QUICK_VERIFY = {
    "mode": "verify",
    "dimension": 3,
    "verify": {"t": [1e-3, 5e-4], "points": 2},
    "io": {"output_dir": "out"},
}


def write_config(directory: str, name: str, document: Any) -> str:
    path = os.path.join(directory, name)
    with open(path, mode="w", encoding="utf8") as file:
        json.dump(document, file)
    return path


def read_bytes(path: str) -> bytes:
    with open(path, mode="rb") as file:
        return file.read()


def test_exit_codes() -> None:
    assert exit_code(ConfigError("x")) == ExitCode.CONFIG
    assert exit_code(DegenerateCurveError("x")) == ExitCode.FAILED
    assert exit_code(FrameExtractionError("x")) == ExitCode.FAILED
    assert exit_code(BlowUpError("x", sigma=1.0)) == ExitCode.BLOWUP
    assert exit_code(KeyboardInterrupt()) == ExitCode.INTERRUPTED


def test_usage_errors() -> None:
    assert main(["verify"]) == 1
    assert main(["fly", "--config", "run.json"]) == 1
    assert main(["verify", "--config", "a.json", "--sweep", "."]) == 1

    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        assert main(["helix", "--config", os.path.join(directory, "none.json")]) == 1

        path = write_config(directory, "bad.json", {**HELIX, "colour": "red"})
        assert main(["helix", "--config", path]) == 1
        assert not os.path.exists(os.path.join(directory, "out"))


def test_helix_products() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        path = write_config(directory, "helix.json", HELIX)

        ### 1) First Run

        assert main(["helix", "--config", path]) == 0
        out = os.path.join(directory, "out")
        assert sorted(os.listdir(out)) == [
            "charges.csv",
            "drift.json",
            "summary.json",
            "trajectory.csv",
        ]

        expected = parse_config(HELIX).sha256
        config_hash, trajectory = read_csv(os.path.join(out, "trajectory.csv"))
        assert config_hash == expected
        assert len(trajectory) == 101
        assert trajectory["sigma"].iloc[-1] == pytest.approx(1.0)

        with open(os.path.join(out, "drift.json"), encoding="utf8") as file:
            drift = json.load(file)
        assert drift["ok"] is True
        assert drift["config_sha256"] == expected

        first = read_bytes(os.path.join(out, "trajectory.csv"))
        charges = read_bytes(os.path.join(out, "charges.csv"))

        ### 2) Second Run Reproduces Bytes

        assert main(["helix", "--config", path]) == 0
        assert read_bytes(os.path.join(out, "trajectory.csv")) == first
        assert read_bytes(os.path.join(out, "charges.csv")) == charges


def test_extract() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        write_config(
            directory,
            "curve.json",
            {
                "kind": "builtin",
                "builtin": {
                    "name": "helix",
                    "params": {"kappa1": -1.0, "kappa2": 1.0, "sigma_max": 1.0},
                },
            },
        )
        path = write_config(
            directory,
            "extract.json",
            {
                "mode": "extract",
                "integrator": {"h": 0.1},
                "io": {"input": "curve.json", "output_dir": "out", "formats": ["csv"]},
            },
        )

        assert main(["extract", "--config", path]) == 0
        _, profile = read_csv(os.path.join(directory, "out", "profile.csv"))
        assert len(profile) == 11
        assert np.allclose(profile["kappa1"], -1.0, atol=1e-8)
        assert np.allclose(profile["kappa2"], 1.0, atol=1e-6)
        assert not os.path.exists(os.path.join(directory, "out", "summary.json"))


def test_reconstruct() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        path = write_config(
            directory,
            "reconstruct.json",
            {
                "mode": "reconstruct",
                "profile": {"kappa1": [-1.0, 0.1], "kappa2": 1.0},
                "integrator": {"h": 0.01, "sigma_max": 1.0},
                "io": {"output_dir": "out"},
            },
        )
        assert main(["reconstruct", "--config", path]) == 0

        _, trajectory = read_csv(os.path.join(directory, "out", "trajectory.csv"))
        assert len(trajectory) == 101
        assert trajectory["kappa1"].iloc[-1] == pytest.approx(-0.9)
        assert trajectory["gram_residual"].max() <= 1e-8

        summary_path = os.path.join(directory, "out", "summary.json")
        with open(summary_path, encoding="utf8") as file:
            summary = json.load(file)
        assert summary["mode"] == "reconstruct"
        assert summary["steps"] == 100


def test_simulate_blow_up() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        path = write_config(
            directory,
            "blowup.json",
            {
                "mode": "simulate",
                "dimension": 3,
                "model": {"kind": "LinearK1", "alpha": 0.0, "beta": 1.0},
                "initial": {"kappa1": 3.0, "gamma": -3.5},
                "integrator": {"h": 1e-3, "sigma_max": 10.0},
                "io": {"output_dir": "out"},
            },
        )
        with np.errstate(over="ignore", invalid="ignore"):
            assert main(["simulate", "--config", path]) == 3

        _, profile = read_csv(os.path.join(directory, "out", "profile.csv"))
        assert len(profile) > 1
        assert np.all(np.isfinite(profile["kappa1"]))


def test_simulate_checks_residuals() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        well = {
            "mode": "simulate",
            "dimension": 3,
            "model": {"kind": "LinearK1", "alpha": 0.0, "beta": 1.0},
            "initial": {"kappa1": -1.5, "dkappa1": 0.4, "gamma": -3.5},
            "integrator": {"h": 1e-3, "sigma_max": 2.0},
            "io": {"output_dir": "well"},
        }
        path = write_config(directory, "well.json", well)
        assert main(["simulate", "--config", path]) == 0

        summary_path = os.path.join(directory, "well", "summary.json")
        with open(summary_path, encoding="utf8") as file:
            summary = json.load(file)
        assert summary["residuals"]["ok"] is True
        assert summary["residuals"]["first_integral"] <= 1e-7
        assert os.path.exists(os.path.join(directory, "well", "drift.json"))

        ### LinearK2 has no charges, only residuals

        twist = {
            "mode": "simulate",
            "model": {"kind": "LinearK2", "lambda2": 0.5},
            "initial": {"kappa2": 1.0, "kappa1": 0.0},
            "integrator": {"h": 1e-3, "sigma_max": 2.0},
            "io": {"output_dir": "twist"},
        }
        path = write_config(directory, "twist.json", twist)
        assert main(["simulate", "--config", path]) == 0
        assert not os.path.exists(os.path.join(directory, "twist", "drift.json"))

        ### A tolerance no residual can meet fails the run

        strict = {**twist, "tolerances": {"residual": 1e-300}}
        path = write_config(directory, "strict.json", strict)
        assert main(["simulate", "--config", path]) == 2

        summary_path = os.path.join(directory, "twist", "summary.json")
        with open(summary_path, encoding="utf8") as file:
            summary = json.load(file)
        assert summary["residuals"]["ok"] is False
        assert summary["residuals"]["midpoint"] > 1e-300


def test_verify() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        path = write_config(directory, "verify.json", QUICK_VERIFY)
        assert main(["verify", "--config", path]) == 0

        verify = os.path.join(directory, "out", "verify.json")
        with open(verify, encoding="utf8") as file:
            report = json.load(file)
        assert report["passed"] is True
        assert "delta_kappa2" in report["helix"]["skipped"]
        assert report["stationarity"]["LinearK1"]["passed"] is True
        solved = report["stationarity"]["LinearK1 solution"]
        assert solved["passed"] is True
        assert len(solved["first_variation"]) == 4

        ### A sabotaged formula must fail the battery

        config = parse_config(QUICK_VERIFY, base=Path(directory))
        sabotaged = {"omega": lambda d, p, _, s: 2 * omega(d, p, s) + 1}
        assert cmd_verify(config, sabotaged) == ExitCode.FAILED


def test_sweep() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        write_config(directory, "a.json", HELIX)
        write_config(directory, "b.json", {**HELIX, "dimension": 3})
        assert sweep(directory, workers=2) == 0
        assert os.path.exists(os.path.join(directory, "a", "trajectory.csv"))
        assert os.path.exists(os.path.join(directory, "b", "trajectory.csv"))

        write_config(directory, "c.json", {**HELIX, "colour": "red"})
        assert main(["helix", "--sweep", directory, "--workers", "2"]) == 1

    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        with pytest.raises(ConfigError):
            sweep(directory)
