"""Pluggable per-step execution semantics."""

from .actions import (
    Action,
    Call,
    ExecContext,
    ExecutorDescriptor,
    Fault,
    HeapDelta,
    Return,
    Step,
    action_to_wire,
    parse_action,
)
from .builtins import BUILTIN_NAMES, call_builtin
from .reference import ReferenceExecutor
from .replay import ReplayExecutor, ScriptEntry, load_script, script_from_trace

__all__ = [
    "Action",
    "BUILTIN_NAMES",
    "Call",
    "ExecContext",
    "ExecutorDescriptor",
    "Fault",
    "HeapDelta",
    "ReferenceExecutor",
    "ReplayExecutor",
    "Return",
    "ScriptEntry",
    "Step",
    "action_to_wire",
    "call_builtin",
    "load_script",
    "parse_action",
    "script_from_trace",
]
