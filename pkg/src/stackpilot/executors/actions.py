"""The executor protocol: one schema-validated action per step.

Every executor — deterministic interpreter, scripted replay, or remote
model — sees a read-only ExecContext and must answer with exactly one
Action. The wire format is a closed JSON schema so that model output is
checkable, replayable, and diffable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Mapping, Protocol, Union, runtime_checkable

from ..agents import DONE, UNSET, _Unset
from ..errors import InvalidValue, SchemaError
from ..model import FunctionDef
from ..values import Value, ensure_value

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

LOGS_TAIL_LIMIT = 20

SCOPE_LOCAL = "local"
SCOPE_GLOBAL = "global"


@dataclass(frozen=True)
class HeapDelta:
    scope_kind: str  # local | global
    name: str
    value: Value


@dataclass(frozen=True)
class Step:
    """Execute the pointed-to line: apply deltas, optionally log, move on."""

    next_pointer: str  # line label, or DONE for an implicit null return
    deltas: tuple[HeapDelta, ...] = ()
    log: str | None = None


@dataclass(frozen=True)
class Call:
    """Suspend and invoke another function with already-evaluated args.

    resume_pointer DONE means the caller completes with an implicit null
    return once the callee's value has been delivered (a call on the last
    executable line).
    """

    callee: str
    args: tuple[Value, ...]
    result_binding: str | None
    resume_pointer: str


@dataclass(frozen=True)
class Return:
    value: Value


@dataclass(frozen=True)
class Fault:
    message: str


Action = Union[Step, Call, Return, Fault]


@dataclass(frozen=True)
class ExecContext:
    """Read-only view of one agent's state; never contains another agent's locals."""

    function: FunctionDef
    appearance_index: int
    pointer: str
    locals: Mapping[str, Value]
    visible_globals: Mapping[str, Value]
    just_returned: Value | _Unset = UNSET
    logs_tail: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExecutorDescriptor:
    name: str
    deterministic: bool


@runtime_checkable
class Executor(Protocol):
    descriptor: ExecutorDescriptor

    def next_step(self, ctx: ExecContext) -> Action: ...


def action_to_wire(action: Action) -> dict:
    """Serialize an action to its wire-schema JSON object."""
    if isinstance(action, Step):
        wire: dict = {"type": "step", "next_pointer": action.next_pointer}
        if action.deltas:
            wire["deltas"] = [
                {"scope": d.scope_kind, "name": d.name, "value": d.value} for d in action.deltas
            ]
        if action.log is not None:
            wire["log"] = action.log
        return wire
    if isinstance(action, Call):
        return {
            "type": "call",
            "callee": action.callee,
            "args": list(action.args),
            "result_binding": action.result_binding,
            "resume_pointer": action.resume_pointer,
        }
    if isinstance(action, Return):
        return {"type": "return", "value": action.value}
    if isinstance(action, Fault):
        return {"type": "fault", "message": action.message}
    raise TypeError(f"not an action: {action!r}")


def _require_ident(obj: object, what: str) -> str:
    if not isinstance(obj, str) or not _IDENT_RE.match(obj):
        raise SchemaError(f"{what} must be an identifier, got {obj!r}")
    return obj


def _require_label(obj: object, function: FunctionDef, what: str, allow_done: bool) -> str:
    if not isinstance(obj, str):
        raise SchemaError(f"{what} must be a string label")
    if allow_done and obj == DONE:
        return obj
    if not function.has_label(obj):
        raise SchemaError(f"{what}: unknown label {obj!r} for function {function.name}")
    return obj


def _check_fields(obj: dict, required: set[str], optional: set[str]) -> None:
    keys = set(obj)
    missing = required - keys
    if missing:
        raise SchemaError(f"missing fields: {sorted(missing)}")
    unknown = keys - required - optional - {"type"}
    if unknown:
        raise SchemaError(f"unknown fields: {sorted(unknown)}")


def _coerce(obj: object, path: str) -> Value:
    try:
        return ensure_value(obj, path)
    except InvalidValue as exc:
        raise SchemaError(str(exc)) from exc


def wire_to_action(obj: object, function: FunctionDef) -> Action:
    """Validate one wire object against the action schema."""
    if not isinstance(obj, dict):
        raise SchemaError("action must be a JSON object")
    kind = obj.get("type")
    if kind == "step":
        _check_fields(obj, {"next_pointer"}, {"deltas", "log"})
        next_pointer = _require_label(obj["next_pointer"], function, "next_pointer", allow_done=True)
        raw_deltas = obj.get("deltas", [])
        if not isinstance(raw_deltas, list):
            raise SchemaError("deltas must be a list")
        deltas = []
        for i, d in enumerate(raw_deltas):
            if not isinstance(d, dict):
                raise SchemaError(f"deltas[{i}] must be an object")
            _check_fields(d, {"scope", "name", "value"}, set())
            scope = d["scope"]
            if scope not in (SCOPE_LOCAL, SCOPE_GLOBAL):
                raise SchemaError(f"deltas[{i}].scope must be 'local' or 'global'")
            deltas.append(
                HeapDelta(
                    scope_kind=scope,
                    name=_require_ident(d["name"], f"deltas[{i}].name"),
                    value=_coerce(d["value"], f"deltas[{i}].value"),
                )
            )
        log = obj.get("log")
        if log is not None and not isinstance(log, str):
            raise SchemaError("log must be a string")
        return Step(next_pointer=next_pointer, deltas=tuple(deltas), log=log)
    if kind == "call":
        _check_fields(obj, {"callee", "args", "resume_pointer"}, {"result_binding"})
        callee = _require_ident(obj["callee"], "callee")
        args = obj["args"]
        if not isinstance(args, list):
            raise SchemaError("args must be a list")
        binding = obj.get("result_binding")
        if binding is not None:
            binding = _require_ident(binding, "result_binding")
        return Call(
            callee=callee,
            args=tuple(_coerce(a, f"args[{i}]") for i, a in enumerate(args)),
            result_binding=binding,
            resume_pointer=_require_label(
                obj["resume_pointer"], function, "resume_pointer", allow_done=True
            ),
        )
    if kind == "return":
        _check_fields(obj, {"value"}, set())
        return Return(value=_coerce(obj["value"], "value"))
    if kind == "fault":
        _check_fields(obj, {"message"}, set())
        message = obj["message"]
        if not isinstance(message, str):
            raise SchemaError("message must be a string")
        return Fault(message=message)
    raise SchemaError(f"unknown action type {kind!r}")


def _reject_constant(name: str) -> None:
    raise SchemaError(f"non-finite number {name} is not a value")


def parse_action(text: Union[str, bytes], function: FunctionDef) -> Action:
    """Parse and strictly validate one wire-format action. Total: raises only SchemaError."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"action bytes are not UTF-8: {exc}") from exc
    if not isinstance(text, str):
        raise SchemaError(f"expected text, got {type(text).__name__}")
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except (ValueError, RecursionError) as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    try:
        return wire_to_action(obj, function)
    except SchemaError:
        raise
    except RecursionError as exc:
        raise SchemaError("action nesting too deep") from exc
