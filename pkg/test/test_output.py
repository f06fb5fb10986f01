import glob
import json
import math
import os
import os.path
from tempfile import TemporaryDirectory

import numpy as np
import pandas as pd
import pytest

from nullfrenet.label import Matching
from nullfrenet.output import atomic_write, jsonable, read_csv, write_csv, write_json


DIR = os.path.dirname(__file__)
PREFIX = "test_output-"
HASH = "0" * 63 + "1"


def read_all(path: str) -> str:
    with open(path, mode="r", encoding="utf8") as file:
        return file.read()


def test_atomic_write() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        path = os.path.join(directory, "nested", "file.txt")

        ### 1) Write Original

        with atomic_write(path) as file:
            file.write("original")

        assert read_all(path) == "original"
        assert len(glob.glob(path + "-*")) == 0

        ### 2) Fail to Write Update

        with pytest.raises(RuntimeError):
            with atomic_write(path) as file:
                file.write("update")
                file.flush()
                raise RuntimeError()

        assert read_all(path) == "original"
        assert len(glob.glob(path + "-*")) == 0

        ### 3) Write Update

        with atomic_write(path) as file:
            file.write("update")

        assert read_all(path) == "update"


def test_csv() -> None:
    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        path = os.path.join(directory, "profile.csv")
        frame = pd.DataFrame(
            {"sigma": [0.0, 0.1, 0.2], "kappa1": [1 / 3, math.pi, -1e-300]}
        )
        write_csv(path, frame, HASH)

        text = read_all(path)
        assert text.startswith(f"# config-sha256: {HASH}\nsigma,kappa1\n")
        assert "\r" not in text

        config_hash, back = read_csv(path)
        assert config_hash == HASH
        assert back["kappa1"].tolist() == frame["kappa1"].tolist()

        ### Files without the hash line read just as well

        with open(path, mode="w", encoding="utf8") as file:
            file.write("sigma,kappa1\n0,1\n")
        config_hash, back = read_csv(path)
        assert config_hash is None
        assert len(back) == 1


def test_json() -> None:
    assert jsonable(
        {
            "matching": Matching.FIXED_LAMBDA,
            "values": np.array([1.0, np.nan]),
            "flag": np.bool_(True),
            "count": np.int64(3),
            1: (np.float64(np.inf),),
        }
    ) == {
        "matching": "fixed_lambda",
        "values": [1.0, None],
        "flag": True,
        "count": 3,
        "1": [None],
    }

    with TemporaryDirectory(dir=DIR, prefix=PREFIX) as directory:
        path = os.path.join(directory, "report.json")
        write_json(path, {"drift": float("nan"), "ok": True}, HASH)
        data = json.loads(read_all(path))
        assert data == {"config_sha256": HASH, "drift": None, "ok": True}
        assert read_all(path).endswith("}\n")
