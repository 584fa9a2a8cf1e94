# Map JSON {"n": int, "a": [[...], ...]} and Orthogonal JSON {"dim": int, "m": [[...], ...]} interchange.
import json
from typing import Union

import numpy as np

from kossakowski.construction import OrthogonalMatrix
from kossakowski.errors import MapFormatError
from kossakowski.map_core import DiagonalTypeMap


def _parse(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise MapFormatError(f"invalid JSON: {e.msg}", e.lineno, e.colno) from e
    if not isinstance(data, dict):
        raise MapFormatError("expected a JSON object")
    return data


def _matrix(data: dict, size_key: str, entries_key: str) -> np.ndarray:
    for key in (size_key, entries_key):
        if key not in data:
            raise MapFormatError(f"missing key {key!r}")
    size = data[size_key]
    if not isinstance(size, int) or isinstance(size, bool):
        raise MapFormatError(f"{size_key!r} must be an integer, got {size!r}")
    rows = data[entries_key]
    if not isinstance(rows, list) or len(rows) != size or any(not isinstance(r, list) or len(r) != size for r in rows):
        raise MapFormatError(f"{entries_key!r} must be a {size} x {size} list of rows")
    try:
        return np.array(rows, dtype=float)
    except (TypeError, ValueError) as e:
        raise MapFormatError(f"{entries_key!r} must contain numbers only") from e


def map_from_json(text: str) -> DiagonalTypeMap:
    """
    :raises MapFormatError: on malformed JSON (with line and column) or a wrong schema.
    """
    data = _parse(text)
    return DiagonalTypeMap(data.get("n"), _matrix(data, "n", "a"))


def map_to_json(map: DiagonalTypeMap) -> str:
    return json.dumps({"n": map.n, "a": map.a.tolist()})


def orthogonal_from_json(text: str) -> OrthogonalMatrix:
    data = _parse(text)
    return OrthogonalMatrix(data.get("dim"), _matrix(data, "dim", "m"))


def orthogonal_to_json(m: OrthogonalMatrix) -> str:
    return json.dumps({"dim": m.dim, "m": m.m.tolist()})


def read_json_file(path: str, kind: str = "map") -> Union[DiagonalTypeMap, OrthogonalMatrix]:
    """
    Loads a Map JSON (``kind="map"``) or Orthogonal JSON (``kind="orthogonal"``) file.
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    if kind == "map":
        return map_from_json(text)
    if kind == "orthogonal":
        return orthogonal_from_json(text)
    raise ValueError(f"unknown JSON kind {kind!r}")
