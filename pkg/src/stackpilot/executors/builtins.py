"""Builtin callables resolved inline by every executor.

These never become stack frames: the reference executor folds them into
expressions, and the scheduler applies builtin Call actions as immediate
step effects.
"""

from __future__ import annotations

import math
from typing import Sequence

from ..values import Value, display

BUILTIN_NAMES = ("len", "print", "abs", "min", "max", "gcd")


def call_builtin(name: str, args: Sequence[Value]) -> tuple[Value, str | None]:
    """Apply a builtin; returns (value, log line or None). Raises ValueError on misuse."""
    if name == "len":
        if len(args) != 1 or not isinstance(args[0], (str, list, dict)):
            raise ValueError("len takes one string, list, or map")
        return len(args[0]), None
    if name == "print":
        return None, " ".join(display(a) for a in args)
    if name == "abs":
        if len(args) != 1 or isinstance(args[0], bool) or not isinstance(args[0], (int, float)):
            raise ValueError("abs takes one number")
        return abs(args[0]), None
    if name in ("min", "max"):
        fn = min if name == "min" else max
        if len(args) == 1 and isinstance(args[0], list):
            items = args[0]
        else:
            items = list(args)
        if not items:
            raise ValueError(f"{name} of empty sequence")
        try:
            return fn(items), None
        except TypeError as exc:
            raise ValueError(f"{name}: {exc}") from exc
    if name == "gcd":
        if len(args) != 2 or any(isinstance(a, bool) or not isinstance(a, int) for a in args):
            raise ValueError("gcd takes two integers")
        return math.gcd(args[0], args[1]), None
    raise ValueError(f"unknown builtin {name!r}")
