"""Closed value domain exchanged between agents and written to traces.

A Value is one of: None, bool, int (arbitrary precision), float (finite),
str, list of Value, or dict with str keys. The domain is exactly the JSON
data model minus non-finite floats, so values serialize without a tagging
layer.
"""

from __future__ import annotations

import json
import math
from typing import Union

from .errors import InvalidValue

Value = Union[None, bool, int, float, str, list, dict]


def ensure_value(obj: object, path: str = "value") -> Value:
    """Validate obj against the value domain, returning a defensive copy."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise InvalidValue(f"{path}: non-finite float {obj!r}")
        return obj
    if isinstance(obj, list):
        return [ensure_value(item, f"{path}[{i}]") for i, item in enumerate(obj)]
    if isinstance(obj, dict):
        out = {}
        for key, item in obj.items():
            if not isinstance(key, str):
                raise InvalidValue(f"{path}: map key {key!r} is not a string")
            out[key] = ensure_value(item, f"{path}.{key}")
        return out
    raise InvalidValue(f"{path}: {type(obj).__name__} is outside the value domain")


def deep_copy(value: Value) -> Value:
    if isinstance(value, list):
        return [deep_copy(v) for v in value]
    if isinstance(value, dict):
        return {k: deep_copy(v) for k, v in value.items()}
    return value


def structural_equal(a: Value, b: Value) -> bool:
    """Deep equality that keeps value tags apart (True != 1, 1 != 1.0)."""
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return type(a) is type(b) and a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(structural_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(structural_equal(a[k], b[k]) for k in a)
    if type(a) is not type(b):
        return False
    return a == b


def render(value: Value) -> str:
    """Canonical single-line rendering (sorted map keys, shortest floats)."""
    return json.dumps(value, sort_keys=True, ensure_ascii=True, separators=(",", ":"))


def display(value: Value) -> str:
    """Human rendering used in logs: bare strings stay unquoted."""
    if isinstance(value, str):
        return value
    return render(value)
