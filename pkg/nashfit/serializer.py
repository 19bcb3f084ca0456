import dataclasses
import enum
import json
import math
import os
import pathlib
import tempfile
from typing import List, Mapping

import numpy as np

# Optional dependencies
try:
    import pydantic
except ImportError:
    pydantic = None

FORMAT_VERSION = 1


class NashfitJSONEncoder(json.JSONEncoder):
    """json encoder that understands numpy, dataclasses and enums."""

    def default(self, obj):
        converted = to_jsonable(obj)
        if converted is obj:
            return super().default(obj)
        return converted


def _float(value):
    # NaN/inf are undefined sentinels in every report
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        return None
    return value


def to_jsonable(obj):
    """
    Converts report objects into JSON-compatible primitives.
    Non-finite floats become None so reports stay valid JSON.
    """
    if obj is None or isinstance(obj, (str, bool)):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return _float(obj)

    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return _float(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]

    if pydantic and isinstance(obj, pydantic.BaseModel):
        return to_jsonable(obj.model_dump(mode="json"))

    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, pathlib.Path):
        return str(obj)

    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return {
            f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
        }

    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(i) for i in obj]
    if isinstance(obj, (set, frozenset)):
        return [to_jsonable(i) for i in sorted(obj)]

    return obj


def dumps(obj, indent: int = 2) -> str:
    """Serializes a report tree; the output is stable for identical inputs."""
    return json.dumps(to_jsonable(obj), indent=indent, cls=NashfitJSONEncoder)


def versioned(payload: dict) -> dict:
    """Prepends the report format version."""
    return {"format_version": FORMAT_VERSION, **payload}


def atomic_write_group(files: Mapping) -> List[pathlib.Path]:
    """Stages every ``{path: text}`` entry next to its target, then renames them all into place.

    Nothing is published unless every file was written; staged temporaries are
    removed on failure.
    """
    staged = []
    try:
        for path, text in files.items():
            path = pathlib.Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
            staged.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)
    return [path for _, path in staged]


def atomic_write_text(path, text: str) -> pathlib.Path:
    """Writes next to the target and renames over it; a failed write leaves nothing behind."""
    return atomic_write_group({path: text})[0]


def json_text(payload) -> str:
    return dumps(payload) + "\n"


def write_json(path, payload) -> pathlib.Path:
    return atomic_write_text(path, json_text(payload))
