"""Frozen agent execution contexts: capture, restore, serialize, destroy.

A snapshot packages the four parts of a suspended invocation — local
state, execution pointer, execution logs, and interface state — under the
identity (function name, appearance index). Snapshots are deep copies:
mutating the live agent afterwards never changes a captured snapshot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .agents import Agent, DONE, FINISHED, SUSPENDED, UNSET, _Unset
from .errors import CorruptSnapshot, DecodeError, InvalidState, InvalidValue
from .model import FunctionDef
from .values import Value, deep_copy, ensure_value

_IDENT_KEYS = {"id", "local_state", "execution_pointer", "execution_logs", "interface_state", "frozen_at"}


@dataclass(frozen=True)
class SnapshotId:
    function_name: str
    appearance_index: int

    @property
    def key(self) -> str:
        return f"{self.function_name}:{self.appearance_index}"


@dataclass(frozen=True)
class InterfaceState:
    input: tuple[Value, ...]
    pending_result_binding: str | None = None
    has_pending_call: bool = False
    output: Value | _Unset = UNSET
    just_returned: Value | _Unset = UNSET


@dataclass(frozen=True)
class Snapshot:
    id: SnapshotId
    local_state: dict[str, Value]
    execution_pointer: str
    execution_logs: tuple[str, ...]
    interface_state: InterfaceState
    frozen_at: int


def capture(agent: Agent, step: int) -> Snapshot:
    """Freeze a deep copy of the agent's full execution context."""
    if agent.status == FINISHED:
        raise InvalidState(f"cannot capture finished agent {agent.id}")
    return Snapshot(
        id=SnapshotId(agent.function.name, agent.appearance_index),
        local_state={k: deep_copy(v) for k, v in agent.locals.items()},
        execution_pointer=agent.pointer,
        execution_logs=tuple(agent.logs),
        interface_state=InterfaceState(
            input=tuple(deep_copy(v) for v in agent.input),
            pending_result_binding=agent.pending_result_binding,
            has_pending_call=agent.has_pending_call,
            output=agent.output if isinstance(agent.output, _Unset) else deep_copy(agent.output),
            just_returned=(
                agent.just_returned
                if isinstance(agent.just_returned, _Unset)
                else deep_copy(agent.just_returned)
            ),
        ),
        frozen_at=step,
    )


def restore(snapshot: Snapshot, function: FunctionDef) -> Agent:
    """Thaw a snapshot back into a suspended agent ready to resume."""
    if snapshot.id.function_name != function.name:
        raise CorruptSnapshot(
            f"snapshot is for {snapshot.id.function_name!r}, not {function.name!r}"
        )
    # DONE is legal only for a caller suspended on its last executable line
    pointer_ok = function.has_label(snapshot.execution_pointer) or (
        snapshot.execution_pointer == DONE and snapshot.interface_state.has_pending_call
    )
    if not pointer_ok:
        raise CorruptSnapshot(
            f"pointer {snapshot.execution_pointer!r} is not a line of {function.name}"
        )
    iface = snapshot.interface_state
    if len(iface.input) != len(function.params):
        raise CorruptSnapshot(f"input arity does not match {function.name} parameters")
    return Agent(
        function=function,
        appearance_index=snapshot.id.appearance_index,
        input=tuple(deep_copy(v) for v in iface.input),
        locals={k: deep_copy(v) for k, v in snapshot.local_state.items()},
        pointer=snapshot.execution_pointer,
        logs=list(snapshot.execution_logs),
        output=iface.output if isinstance(iface.output, _Unset) else deep_copy(iface.output),
        status=SUSPENDED,
        pending_result_binding=iface.pending_result_binding,
        has_pending_call=iface.has_pending_call,
        just_returned=(
            iface.just_returned
            if isinstance(iface.just_returned, _Unset)
            else deep_copy(iface.just_returned)
        ),
    )


def snapshot_to_record(snapshot: Snapshot) -> dict:
    """JSON-ready record, also embedded in trace snapshot events."""
    iface: dict = {
        "input": list(snapshot.interface_state.input),
        "pending_result_binding": snapshot.interface_state.pending_result_binding,
        "has_pending_call": snapshot.interface_state.has_pending_call,
    }
    if not isinstance(snapshot.interface_state.output, _Unset):
        iface["output"] = snapshot.interface_state.output
    if not isinstance(snapshot.interface_state.just_returned, _Unset):
        iface["just_returned"] = snapshot.interface_state.just_returned
    return {
        "id": {"function": snapshot.id.function_name, "index": snapshot.id.appearance_index},
        "local_state": dict(snapshot.local_state),
        "execution_pointer": snapshot.execution_pointer,
        "execution_logs": list(snapshot.execution_logs),
        "interface_state": iface,
        "frozen_at": snapshot.frozen_at,
    }


def snapshot_from_record(record: object) -> Snapshot:
    try:
        if not isinstance(record, dict):
            raise DecodeError("snapshot record must be an object")
        unknown = set(record) - _IDENT_KEYS
        if unknown:
            raise DecodeError(f"snapshot record has unknown fields: {sorted(unknown)}")
        ident = record["id"]
        name = ident["function"]
        index = ident["index"]
        if not isinstance(name, str) or not isinstance(index, int) or isinstance(index, bool) or index < 1:
            raise DecodeError("bad snapshot id")
        local_state = record["local_state"]
        if not isinstance(local_state, dict):
            raise DecodeError("local_state must be a map")
        pointer = record["execution_pointer"]
        if not isinstance(pointer, str):
            raise DecodeError("execution_pointer must be a string")
        logs = record["execution_logs"]
        if not isinstance(logs, list) or not all(isinstance(x, str) for x in logs):
            raise DecodeError("execution_logs must be a list of strings")
        iface = record["interface_state"]
        if not isinstance(iface, dict):
            raise DecodeError("interface_state must be an object")
        iface_unknown = set(iface) - {
            "input",
            "pending_result_binding",
            "has_pending_call",
            "output",
            "just_returned",
        }
        if iface_unknown:
            raise DecodeError(f"interface_state has unknown fields: {sorted(iface_unknown)}")
        inputs = iface["input"]
        if not isinstance(inputs, list):
            raise DecodeError("interface_state.input must be a list")
        binding = iface.get("pending_result_binding")
        if binding is not None and not isinstance(binding, str):
            raise DecodeError("pending_result_binding must be a name or null")
        pending = iface.get("has_pending_call", False)
        if not isinstance(pending, bool):
            raise DecodeError("has_pending_call must be a boolean")
        frozen_at = record["frozen_at"]
        if not isinstance(frozen_at, int) or isinstance(frozen_at, bool) or frozen_at < 0:
            raise DecodeError("frozen_at must be a non-negative integer")
        return Snapshot(
            id=SnapshotId(name, index),
            local_state={k: ensure_value(v, f"local_state.{k}") for k, v in local_state.items()},
            execution_pointer=pointer,
            execution_logs=tuple(logs),
            interface_state=InterfaceState(
                input=tuple(ensure_value(v, "input") for v in inputs),
                pending_result_binding=binding,
                has_pending_call=pending,
                output=ensure_value(iface["output"], "output") if "output" in iface else UNSET,
                just_returned=(
                    ensure_value(iface["just_returned"], "just_returned")
                    if "just_returned" in iface
                    else UNSET
                ),
            ),
            frozen_at=frozen_at,
        )
    except DecodeError:
        raise
    except (KeyError, TypeError, InvalidValue) as exc:
        raise DecodeError(f"malformed snapshot record: {exc}") from exc


def serialize(snapshot: Snapshot) -> bytes:
    return json.dumps(
        snapshot_to_record(snapshot), sort_keys=True, ensure_ascii=True, separators=(",", ":")
    ).encode("utf-8")


def deserialize(data: bytes) -> Snapshot:
    try:
        record = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise DecodeError(f"cannot decode snapshot bytes: {exc}") from exc
    return snapshot_from_record(record)
