import json
import os
import os.path
from pathlib import Path
from tempfile import TemporaryDirectory
from typing import Any

import pandas as pd
import pytest

from nullfrenet.config import (
    config_hash,
    load_config,
    load_curve,
    load_profile,
    parse_config,
    validate_document,
)
from nullfrenet.curve import null_cubic, SplineCurve
from nullfrenet.error import ConfigError
from nullfrenet.jet import PolynomialField
from nullfrenet.label import Matching, ModelKind, RunMode
from nullfrenet.output import write_csv
from nullfrenet.reconstruct import HelixCurve


DIR = os.path.dirname(__file__)
PREFIX = "test_config-"


def rejects(document: Any, fragment: str) -> None:
    with pytest.raises(ConfigError) as info:
        validate_document(document)
    assert fragment in str(info.value)


def test_defaults() -> None:
    doc = validate_document({"mode": "simulate"})
    assert doc["dimension"] == 4
    assert doc["model"]["kind"] == "PseudoArclength"
    assert doc["integrator"] == {"h": 1e-3, "sigma_max": 10.0, "renorm_every": 100}
    assert doc["verify"]["t"] == [1e-3, 5e-4, 2.5e-4]

    config = parse_config({"mode": "simulate", "dimension": 3})
    assert config.mode == RunMode.simulate
    assert config.model.kind == ModelKind.PseudoArclength
    assert config.model.dimension == 3
    assert config.verify.matchings == (Matching.FIXED_LAMBDA,)
    assert config.drift == 1e-6
    assert config.output("x.csv") == Path("x.csv")


def test_rejections() -> None:
    rejects([], "JSON object")
    rejects({"mode": "simulate", "colour": 1}, '"colour"')
    rejects({"mode": "simulate", "model": {"gamma": 1}}, '"model.gamma"')
    rejects({"mode": "simulate", "model": {"alpha": True}}, '"model.alpha"')
    rejects({"mode": "simulate", "model": {"alpha": "1"}}, '"model.alpha"')
    rejects({"mode": "simulate", "initial": {"sign": 0}}, '"initial.sign"')
    rejects({"mode": "simulate", "dimension": 5}, '"dimension"')
    rejects({"mode": "simulate", "io": {"formats": ["xml"]}}, '"io.formats[0]"')
    rejects({"mode": "fly"}, '"mode"')
    rejects({}, '"mode" is required')

    # Python's json module happily parses NaN
    rejects(json.loads('{"mode": "simulate", "model": {"beta": NaN}}'), "finite")

    for document, fragment in [
        ({"model": {"kind": "LinearK1", "beta": 0}}, '"model"'),
        ({"integrator": {"h": 0}}, '"integrator.h"'),
        ({"integrator": {"renorm_every": -1}}, '"integrator.renorm_every"'),
        ({"integrator": {"h": 0.3, "sigma_max": 1.0}}, "does not divide"),
        ({"verify": {"t": [1e-4, 1e-3]}}, '"verify.t"'),
        ({"dimension": 3, "helix": {"kappa2": 1.0}}, '"helix.kappa2"'),
        ({"tolerances": {"null": -1}}, '"tolerances.null"'),
    ]:
        with pytest.raises(ConfigError) as info:
            parse_config({"mode": "simulate", **document})
        assert fragment in str(info.value)


def test_overrides_and_hash() -> None:
    document = {"mode": "simulate", "model": {"alpha": 2}}
    config = parse_config(document, mode="helix", output_dir="out")
    assert config.mode == RunMode.helix
    assert config.io.output_dir == Path("out")

    # Defaults are part of the hashed document, key order is not
    same = {"model": {"alpha": 2, "beta": 0.0}, "mode": "simulate"}
    assert parse_config(document).sha256 == parse_config(same).sha256
    assert parse_config(document).sha256 == config_hash(validate_document(same))
    assert parse_config(document).sha256 != config.sha256
    assert len(config.sha256) == 64


def test_load_config() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        path = os.path.join(directory, "run.json")

        with pytest.raises(ConfigError):
            load_config(path)

        with open(path, mode="w", encoding="utf8") as file:
            file.write("{ mode: simulate }")
        with pytest.raises(ConfigError):
            load_config(path)

        with open(path, mode="w", encoding="utf8") as file:
            json.dump({"mode": "reconstruct"}, file)
        config = load_config(path)
        assert config.base == Path(directory)
        assert config.resolve("in.csv") == Path(directory) / "in.csv"


def test_load_profile() -> None:
    config = parse_config(
        {"mode": "reconstruct", "profile": {"kappa1": [1.0, 2.0], "kappa2": 0.5}}
    )
    profile = load_profile(config)
    assert isinstance(profile.kappa1, PolynomialField)
    assert profile.at(1.0).kappa1 == 3.0
    assert profile.at(1.0).kappa2 == 0.5

    with pytest.raises(ConfigError):
        load_profile(parse_config({"mode": "reconstruct"}))
    with pytest.raises(ConfigError):
        load_profile(
            parse_config(
                {
                    "mode": "reconstruct",
                    "dimension": 3,
                    "profile": {"kappa1": 1, "kappa2": 1},
                }
            )
        )

    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        frame = pd.DataFrame(
            {
                "sigma": [0.0, 0.5, 1.0, 1.5],
                "kappa1": [-1.0, -1.0, -1.0, -1.0],
                "kappa2": [1.0, 1.0, 1.0, 1.0],
            }
        )
        write_csv(os.path.join(directory, "profile.csv"), frame, "0" * 64)
        config = parse_config(
            {"mode": "reconstruct", "profile": {"input": "profile.csv"}},
            base=Path(directory),
        )
        profile = load_profile(config)
        assert profile.sigma_max == 1.5
        assert profile.at(0.75).kappa2 == pytest.approx(1.0)

        config = parse_config(
            {"mode": "reconstruct", "profile": {"input": "missing.csv"}},
            base=Path(directory),
        )
        with pytest.raises(ConfigError):
            load_profile(config)


def test_load_curve() -> None:
    helix = load_curve(
        {"kind": "builtin", "builtin": {"name": "helix", "params": {"kappa1": -1.0}}}
    )
    assert isinstance(helix, HelixCurve)
    assert helix.pair.kappa1 == -1.0

    loaded = load_curve(
        {
            "kind": "builtin",
            "dimension": 3,
            "builtin": {"name": "null_cubic", "params": {"domain": [0, 2]}},
        }
    )
    assert loaded.dimension == 3
    assert loaded.domain == (0.0, 2.0)

    cubic = null_cubic(3)
    samples = [{"lambda": 0.1 * k, "x": cubic(0.1 * k).tolist()} for k in range(11)]
    spline = load_curve({"kind": "samples", "dimension": 3, "samples": samples})
    assert isinstance(spline, SplineCurve)

    for document in [
        [],
        {"kind": "magic"},
        {"kind": "samples", "samples": []},
        {"kind": "samples", "dimension": 3, "samples": samples[:3]},
        {"kind": "samples", "dimension": 4, "samples": samples},
        {"kind": "samples", "samples": [{"x": [0, 0, 0, 0]}]},
        {"kind": "builtin", "builtin": {"name": "spiral"}},
        {"kind": "builtin", "builtin": {"name": "null_cubic", "params": {"n": 1}}},
        {"kind": "builtin", "builtin": {"name": "helix", "params": {"kappa2": -1}}},
        {"kind": "builtin", "dimension": 5, "builtin": {"name": "helix"}},
    ]:
        with pytest.raises(ConfigError):
            load_curve(document)
