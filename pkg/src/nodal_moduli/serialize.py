"""JSON encodings shared by the library and the command line.

Complex numbers are ``[re, im]`` pairs and matrices are lists of rows of pairs.
Floats are written with 17 significant digits so that values round-trip exactly.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np


def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_from_json(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    return complex(float(v[0]), float(v[1]))


def matrix_to_json(m) -> list[list[list[float]]]:
    m = np.asarray(m, dtype=complex)
    return [[complex_to_json(z) for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError(f"matrix JSON must be rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite float {x!r} cannot be written as JSON")
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return format(x, ".17g")


def _to_builtin(obj):
    if isinstance(obj, dict):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_builtin(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, complex):
        return complex_to_json(obj)
    return obj


def dumps(obj, indent: int | None = 2) -> str:
    """``json.dumps`` with every float written to 17 significant digits."""
    return _encode(_to_builtin(obj), indent, 0)


def _encode(obj, indent, level) -> str:
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, list):
        # lists without nested objects stay on one line (matrices, vectors)
        if indent is None or not _has_dict(obj):
            return "[" + ", ".join(_encode(v, None, 0) for v in obj) + "]"
        pad = "\n" + " " * (indent * (level + 1))
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[" + ",".join(items) + "\n" + " " * (indent * level) + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        if indent is None:
            return "{" + ", ".join(json.dumps(k) + ": " + _encode(v, None, 0) for k, v in obj.items()) + "}"
        pad = "\n" + " " * (indent * (level + 1))
        items = [pad + json.dumps(k) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + ",".join(items) + "\n" + " " * (indent * level) + "}"
    return json.dumps(obj)


def _has_dict(v) -> bool:
    if isinstance(v, dict):
        return True
    if isinstance(v, list):
        return any(_has_dict(x) for x in v)
    return False


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
