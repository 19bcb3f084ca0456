import dataclasses
import enum
import json
import math
import pathlib

import numpy as np
import pytest
from pydantic import BaseModel

from nashfit.serializer import (
    FORMAT_VERSION,
    NashfitJSONEncoder,
    atomic_write_group,
    atomic_write_text,
    dumps,
    to_jsonable,
    versioned,
    write_json,
)


class Color(enum.Enum):
    RED = "red"


@dataclasses.dataclass
class Point:
    x: float
    y: np.ndarray


class Settings(BaseModel):
    name: str
    path: pathlib.Path


class TestSerializer:
    def test_primitives(self):
        assert to_jsonable(1) == 1
        assert to_jsonable(1.5) == 1.5
        assert to_jsonable("test") == "test"
        assert to_jsonable(True) is True
        assert to_jsonable(None) is None

    def test_non_finite_floats_become_null(self):
        assert to_jsonable(math.nan) is None
        assert to_jsonable(np.float64(np.inf)) is None
        assert to_jsonable(np.array([1.0, np.nan, -np.inf])) == [1.0, None, None]

    def test_numpy_types(self):
        assert to_jsonable(np.int64(3)) == 3
        assert to_jsonable(np.bool_(True)) is True
        assert to_jsonable(np.eye(2)) == [[1.0, 0.0], [0.0, 1.0]]

    def test_containers(self):
        assert to_jsonable({1: (1, 2)}) == {"1": [1, 2]}
        assert to_jsonable({3, 1, 2}) == [1, 2, 3]

    def test_enum_path_dataclass(self):
        assert to_jsonable(Color.RED) == "red"
        assert to_jsonable(pathlib.Path("a") / "b") == str(pathlib.Path("a") / "b")
        assert to_jsonable(Point(1.0, np.array([2.0]))) == {"x": 1.0, "y": [2.0]}

    def test_pydantic_model(self):
        assert to_jsonable(Settings(name="n", path=pathlib.Path("p"))) == {"name": "n", "path": "p"}

    def test_encoder_passthrough(self):
        assert json.dumps({"v": np.float32(0.5)}, cls=NashfitJSONEncoder) == '{"v": 0.5}'
        with pytest.raises(TypeError):
            json.dumps(object(), cls=NashfitJSONEncoder)

    def test_dumps_is_stable(self):
        payload = {"beta": np.array([1 / 3, 2.0]), "nan": math.nan}
        assert dumps(payload) == dumps(payload)
        assert json.loads(dumps(payload)) == {"beta": [1 / 3, 2.0], "nan": None}


class TestFiles:
    def test_versioned(self):
        assert versioned({"a": 1}) == {"format_version": FORMAT_VERSION, "a": 1}
        assert list(versioned({"a": 1}))[0] == "format_version"

    def test_write_json_creates_parents(self, tmp_path):
        path = write_json(tmp_path / "deep" / "out.json", {"x": np.int32(2)})
        assert json.loads(path.read_text()) == {"x": 2}
        assert path.read_text().endswith("\n")

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        atomic_write_text(tmp_path / "a.txt", "one")
        atomic_write_text(tmp_path / "a.txt", "two")
        assert (tmp_path / "a.txt").read_text() == "two"
        assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]

    def test_failed_write_keeps_old_file(self, tmp_path):
        target = tmp_path / "report.json"
        write_json(target, {"ok": True})
        with pytest.raises(TypeError):
            atomic_write_text(target, None)
        assert json.loads(target.read_text()) == {"ok": True}
        assert [p.name for p in tmp_path.iterdir()] == ["report.json"]

    def test_group_write_publishes_every_file(self, tmp_path):
        paths = atomic_write_group({tmp_path / "a.csv": "x\n1\n", tmp_path / "sub" / "b.json": "{}\n"})
        assert [p.name for p in paths] == ["a.csv", "b.json"]
        assert (tmp_path / "a.csv").read_text() == "x\n1\n"
        assert (tmp_path / "sub" / "b.json").read_text() == "{}\n"

    def test_failed_group_publishes_nothing(self, tmp_path):
        write_json(tmp_path / "b.json", {"old": True})
        with pytest.raises(TypeError):
            atomic_write_group({tmp_path / "a.csv": "x\n1\n", tmp_path / "b.json": None})
        assert sorted(p.name for p in tmp_path.iterdir()) == ["b.json"]
        assert json.loads((tmp_path / "b.json").read_text()) == {"old": True}
