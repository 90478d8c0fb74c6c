"""LIFO agent scheduling: sessions, the variable heap, and the event trace.

A session drives one program run. The stack holds frozen snapshots below
a single live top agent; a call stops the world, freezes the caller, and
pushes the callee; a finished callee pops and its value is bound back
into the restored caller. The session owns the global scope and a
replayable line-delimited JSON trace of everything that happened.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

from .agents import (
    Agent,
    DONE,
    FINISHED,
    READY,
    RUNNING,
    SUSPENDED,
    UNSET,
    _Unset,
    bind_return,
    instantiate_agent,
)
from .errors import (
    ArityMismatch,
    ExecutionFailure,
    ExecutorFailure,
    InvalidState,
    IoError,
    RuntimeFault,
    SchemaError,
    ScriptExhausted,
    ScriptMismatch,
    StackDepthExceeded,
    StepLimitExceeded,
    TransportError,
    UnknownScope,
    UnknownVariable,
)
from .executors.actions import (
    Call,
    ExecContext,
    Fault,
    HeapDelta,
    LOGS_TAIL_LIMIT,
    Return,
    SCOPE_GLOBAL,
    Step,
    action_to_wire,
)
from .executors.builtins import BUILTIN_NAMES, call_builtin
from .model import Program
from .snapshots import Snapshot, SnapshotId, capture, deserialize, restore, serialize, snapshot_to_record
from .values import Value, deep_copy, ensure_value

GLOBAL = "global"

SESSION_RUNNING = "running"
SESSION_FINISHED = "finished"
SESSION_FAILED = "failed"


@dataclass(frozen=True)
class Limits:
    max_steps: int = 10_000
    max_stack_depth: int = 256
    max_executor_retries: int = 3

    def __post_init__(self) -> None:
        if self.max_steps <= 0 or self.max_stack_depth <= 0 or self.max_executor_retries <= 0:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class TraceEvent:
    """One trace record; kinds: push, pop, exec, call, return, snapshot, error."""

    step: int
    kind: str
    agent: tuple[str, int] | None = None
    line: str | None = None
    deltas: tuple[tuple[str, str, Value], ...] = ()
    value: Value | _Unset = UNSET
    snapshot: dict | None = None

    def to_record(self) -> dict:
        record: dict = {"step": self.step, "kind": self.kind}
        if self.agent is not None:
            record["agent"] = {"name": self.agent[0], "idx": self.agent[1]}
        if self.line is not None:
            record["line"] = self.line
        if self.deltas:
            record["deltas"] = [
                {"scope": scope, "name": name, "value": value} for scope, name, value in self.deltas
            ]
        if not isinstance(self.value, _Unset):
            record["value"] = self.value
        if self.snapshot is not None:
            record["snapshot"] = self.snapshot
        return record


def _scope_key(scope: Union[str, SnapshotId, tuple[str, int]]) -> str:
    if scope == GLOBAL:
        return GLOBAL
    if isinstance(scope, SnapshotId):
        return scope.key
    if isinstance(scope, tuple) and len(scope) == 2:
        return f"{scope[0]}:{scope[1]}"
    if isinstance(scope, str):
        return scope
    raise UnknownScope(f"bad scope {scope!r}")


class VariableHeap:
    """Unified dictionary: one global scope plus one view per live frame."""

    def __init__(self) -> None:
        self.global_scope: dict[str, Value] = {}
        self.frames: dict[str, dict[str, Value]] = {}
        self._frozen: set[str] = set()

    def register_frame(self, key: str, locals_map: dict[str, Value], frozen: bool = False) -> None:
        self.frames[key] = locals_map
        if frozen:
            self._frozen.add(key)
        else:
            self._frozen.discard(key)

    def drop_frame(self, key: str) -> None:
        self.frames.pop(key, None)
        self._frozen.discard(key)

    def read(self, scope: Union[str, SnapshotId, tuple[str, int]], name: str) -> Value:
        key = _scope_key(scope)
        if key == GLOBAL:
            if name not in self.global_scope:
                raise UnknownVariable(f"global variable {name!r} is not defined")
            return deep_copy(self.global_scope[name])
        if key not in self.frames:
            raise UnknownScope(f"no live frame {key!r}")
        frame = self.frames[key]
        if name in frame:
            return deep_copy(frame[name])
        if name in self.global_scope:
            return deep_copy(self.global_scope[name])
        raise UnknownVariable(f"variable {name!r} is not defined in {key} or globally")

    def write(self, scope: Union[str, SnapshotId, tuple[str, int]], name: str, value: Value) -> None:
        key = _scope_key(scope)
        value = ensure_value(value)
        if key == GLOBAL:
            self.global_scope[name] = deep_copy(value)
            return
        if key not in self.frames:
            raise UnknownScope(f"no live frame {key!r}")
        if key in self._frozen:
            raise InvalidState(f"frame {key!r} is frozen; only the running frame is writable")
        self.frames[key][name] = deep_copy(value)


StackEntry = Union[Agent, Snapshot]


@dataclass
class Session:
    """One single-threaded run of a program under one executor."""

    program: Program
    executor: object
    limits: Limits
    stack: list[StackEntry] = field(default_factory=list)
    heap: VariableHeap = field(default_factory=VariableHeap)
    trace: list[TraceEvent] = field(default_factory=list)
    step_counter: int = 0
    action_count: int = 0
    status: str = SESSION_RUNNING
    error: str | None = None
    output: Value = None
    _appearance: dict[str, int] = field(default_factory=dict)

    def next_appearance(self, name: str) -> int:
        self._appearance[name] = self._appearance.get(name, 0) + 1
        return self._appearance[name]

    def heap_read(self, scope: Union[str, SnapshotId, tuple[str, int]], name: str) -> Value:
        return self.heap.read(scope, name)

    def heap_write(
        self, scope: Union[str, SnapshotId, tuple[str, int]], name: str, value: Value
    ) -> None:
        self.heap.write(scope, name, value)

    def stack_ids(self) -> list[tuple[str, int]]:
        out = []
        for entry in self.stack:
            if isinstance(entry, Snapshot):
                out.append((entry.id.function_name, entry.id.appearance_index))
            else:
                out.append(entry.id)
        return out

    def _emit(self, event: TraceEvent) -> TraceEvent:
        self.trace.append(event)
        return event


@dataclass
class ExecutionResult:
    status: str
    output: Value
    error: str | None
    trace: tuple[TraceEvent, ...]
    final_globals: dict[str, Value]


def _entry_key(entry: StackEntry) -> str:
    if isinstance(entry, Snapshot):
        return entry.id.key
    return f"{entry.function.name}:{entry.appearance_index}"


def create_session(
    program: Program,
    entry_args: Sequence[Value],
    executor: object,
    limits: Limits | None = None,
) -> Session:
    """Initialize the heap, instantiate the entry agent, and push it."""
    limits = limits or Limits()
    entry_fn = program.entry_function
    args = [ensure_value(a, f"entry_args[{i}]") for i, a in enumerate(entry_args)]
    if len(args) != len(entry_fn.params):
        raise ArityMismatch(
            f"entry {entry_fn.name} takes {len(entry_fn.params)} argument(s), got {len(args)}"
        )
    session = Session(program=program, executor=executor, limits=limits)
    agent = instantiate_agent(entry_fn, args, session.next_appearance(entry_fn.name))
    session.stack.append(agent)
    session.heap.register_frame(_entry_key(agent), agent.locals)
    session._emit(
        TraceEvent(step=0, kind="push", agent=agent.id, line=agent.pointer, value=list(args))
    )
    return session


def _exec_context(session: Session, agent: Agent) -> ExecContext:
    return ExecContext(
        function=agent.function,
        appearance_index=agent.appearance_index,
        pointer=agent.pointer,
        locals={k: deep_copy(v) for k, v in agent.locals.items()},
        visible_globals={k: deep_copy(v) for k, v in session.heap.global_scope.items()},
        just_returned=(
            agent.just_returned
            if isinstance(agent.just_returned, _Unset)
            else deep_copy(agent.just_returned)
        ),
        logs_tail=tuple(agent.logs[-LOGS_TAIL_LIMIT:]),
    )


def _charge_action(session: Session) -> None:
    session.action_count += 1
    if session.action_count > session.limits.max_steps:
        raise StepLimitExceeded(
            f"exceeded {session.limits.max_steps} executor actions; infinite loop or raised limit needed"
        )


def _agent_scope_key(agent: Agent) -> str:
    return f"{agent.function.name}:{agent.appearance_index}"


def _apply_deltas(
    session: Session, agent: Agent, deltas: Iterable[HeapDelta]
) -> tuple[tuple[str, str, Value], ...]:
    applied = []
    frame_key = _agent_scope_key(agent)
    for delta in deltas:
        value = ensure_value(delta.value, f"delta {delta.name}")
        if delta.scope_kind == SCOPE_GLOBAL:
            session.heap.write(GLOBAL, delta.name, value)
            applied.append((GLOBAL, delta.name, value))
        else:
            agent.locals[delta.name] = deep_copy(value)
            applied.append((frame_key, delta.name, value))
    return tuple(applied)


def _validate_pointer(agent: Agent, label: str, what: str) -> None:
    if label == DONE:
        return
    if not agent.function.has_label(label):
        raise RuntimeFault(f"{what} {label!r} is not a line of {agent.function.name}")


def _fail(session: Session, exc: ExecutionFailure) -> TraceEvent:
    session.status = SESSION_FAILED
    session.error = f"{exc.code}: {exc}"
    return session._emit(
        TraceEvent(step=session.step_counter, kind="error", value=session.error)
    )


def step(session: Session) -> TraceEvent:
    """Apply exactly one scheduling iteration and return its primary event."""
    if session.status != SESSION_RUNNING:
        raise InvalidState(f"session is {session.status}, not running")
    session.step_counter += 1
    try:
        return _step_inner(session)
    except ExecutionFailure as exc:
        return _fail(session, exc)
    except (TransportError, SchemaError, ScriptExhausted, ScriptMismatch) as exc:
        return _fail(session, ExecutorFailure(f"{exc.code}: {exc}"))


def _step_inner(session: Session) -> TraceEvent:
    top = session.stack[-1]
    if isinstance(top, Snapshot):
        raise InvalidState("stack top is a snapshot outside a context switch")

    if top.status == FINISHED:
        return _pop_finished(session, top)

    if top.status in (READY, SUSPENDED):
        top.status = RUNNING
    ctx = _exec_context(session, top)
    action = session.executor.next_step(ctx)  # type: ignore[attr-defined]
    top.just_returned = UNSET
    if not isinstance(action, (Step, Call, Return, Fault)):
        raise RuntimeFault(f"executor returned a non-action: {action!r}")
    pointer = top.pointer

    if isinstance(action, Fault):
        raise RuntimeFault(f"at {top.id} {pointer}: {action.message}")

    _charge_action(session)

    if isinstance(action, Step):
        _validate_pointer(top, action.next_pointer, "next_pointer")
        applied = _apply_deltas(session, top, action.deltas)
        if action.log is not None:
            top.logs.append(action.log)
        if action.next_pointer == DONE:
            top.finish(None)
        else:
            top.pointer = action.next_pointer
        event = session._emit(
            TraceEvent(
                step=session.step_counter,
                kind="exec",
                agent=top.id,
                line=pointer,
                deltas=applied,
                value=action_to_wire(action),
            )
        )
        if top.finished:
            event = _emit_implicit_return(session, top, pointer)
        return event

    if isinstance(action, Return):
        top.finish(action.value)
        session._emit(
            TraceEvent(
                step=session.step_counter,
                kind="exec",
                agent=top.id,
                line=pointer,
                value=action_to_wire(action),
            )
        )
        return session._emit(
            TraceEvent(
                step=session.step_counter,
                kind="return",
                agent=top.id,
                line=pointer,
                value=deep_copy(action.value),
            )
        )

    # Call action; builtin names shadow program functions everywhere
    if action.callee in BUILTIN_NAMES:
        return _builtin_call(session, top, action, pointer)
    return _user_call(session, top, action, pointer)


def _emit_implicit_return(session: Session, agent: Agent, line: str) -> TraceEvent:
    """Record the null return of an agent that fell off its last line."""
    return session._emit(
        TraceEvent(
            step=session.step_counter,
            kind="return",
            agent=agent.id,
            line=line,
            value=None,
        )
    )


def _builtin_call(session: Session, top: Agent, action: Call, pointer: str) -> TraceEvent:
    try:
        value, log = call_builtin(action.callee, list(action.args))
    except ValueError as exc:
        raise RuntimeFault(f"at {top.id} {pointer}: {exc}") from None
    _validate_pointer(top, action.resume_pointer, "resume_pointer")
    applied: tuple[tuple[str, str, Value], ...] = ()
    if action.result_binding is not None:
        applied = _apply_deltas(
            session,
            top,
            [HeapDelta(scope_kind="local", name=action.result_binding, value=value)],
        )
    if log is not None:
        top.logs.append(log)
    if action.resume_pointer == DONE:
        top.finish(None)
    else:
        top.pointer = action.resume_pointer
    event = session._emit(
        TraceEvent(
            step=session.step_counter,
            kind="exec",
            agent=top.id,
            line=pointer,
            deltas=applied,
            value=action_to_wire(action),
        )
    )
    if top.finished:
        event = _emit_implicit_return(session, top, pointer)
    return event


def _user_call(session: Session, top: Agent, action: Call, pointer: str) -> TraceEvent:
    callee_fn = session.program.function_named(action.callee)
    if callee_fn is None:
        raise RuntimeFault(f"unknown function {action.callee!r} called at {top.id} {pointer}")
    if len(session.stack) + 1 > session.limits.max_stack_depth:
        raise StackDepthExceeded(
            f"stack depth would exceed {session.limits.max_stack_depth} pushing {action.callee}"
        )
    _validate_pointer(top, action.resume_pointer, "resume_pointer")

    session._emit(
        TraceEvent(
            step=session.step_counter,
            kind="exec",
            agent=top.id,
            line=pointer,
            value=action_to_wire(action),
        )
    )

    # stop the world: freeze the caller in place of its live agent
    top.pointer = action.resume_pointer
    top.pending_result_binding = action.result_binding
    top.has_pending_call = True
    snapshot = capture(top, session.step_counter)
    session.stack[-1] = snapshot
    session.heap.register_frame(snapshot.id.key, snapshot.local_state, frozen=True)
    session._emit(
        TraceEvent(
            step=session.step_counter,
            kind="snapshot",
            agent=top.id,
            line=action.resume_pointer,
            snapshot=snapshot_to_record(snapshot),
        )
    )
    session._emit(
        TraceEvent(
            step=session.step_counter,
            kind="call",
            agent=top.id,
            line=pointer,
            value={
                "callee": action.callee,
                "args": list(action.args),
                "result_binding": action.result_binding,
            },
        )
    )

    try:
        callee = instantiate_agent(
            callee_fn, action.args, session.next_appearance(action.callee)
        )
    except ArityMismatch as exc:
        raise RuntimeFault(str(exc)) from None
    session.stack.append(callee)
    session.heap.register_frame(_agent_scope_key(callee), callee.locals)
    return session._emit(
        TraceEvent(
            step=session.step_counter,
            kind="push",
            agent=callee.id,
            line=callee.pointer,
            value=list(action.args),
        )
    )


def _pop_finished(session: Session, top: Agent) -> TraceEvent:
    ret = None if isinstance(top.output, _Unset) else top.output
    session.stack.pop()
    session.heap.drop_frame(_agent_scope_key(top))
    deltas: tuple[tuple[str, str, Value], ...] = ()
    if session.stack:
        below = session.stack[-1]
        if not isinstance(below, Snapshot):
            raise InvalidState("expected a frozen caller beneath the finished agent")
        caller_fn = session.program.function_named(below.id.function_name)
        if caller_fn is None:
            raise RuntimeFault(f"caller function {below.id.function_name!r} disappeared")
        caller = restore(below, caller_fn)
        bind_return(caller, ret)
        caller_done_implicitly = caller.pointer == DONE
        if caller_done_implicitly:
            # the call sat on the caller's last executable line
            caller.finish(None)
        session.stack[-1] = caller
        session.heap.register_frame(_agent_scope_key(caller), caller.locals)
        binding = below.interface_state.pending_result_binding
        if binding is not None:
            deltas = ((below.id.key, binding, deep_copy(ret)),)
        event = session._emit(
            TraceEvent(
                step=session.step_counter,
                kind="pop",
                agent=top.id,
                deltas=deltas,
                value=deep_copy(ret),
            )
        )
        if caller_done_implicitly:
            _emit_implicit_return(session, caller, DONE)
        return event
    session.status = SESSION_FINISHED
    session.output = deep_copy(ret)
    return session._emit(
        TraceEvent(
            step=session.step_counter,
            kind="pop",
            agent=top.id,
            deltas=deltas,
            value=deep_copy(ret),
        )
    )


def run(
    program: Program,
    entry_args: Sequence[Value],
    executor: object,
    limits: Limits | None = None,
) -> ExecutionResult:
    """Drive a fresh session to completion."""
    session = create_session(program, entry_args, executor, limits)
    while session.status == SESSION_RUNNING:
        step(session)
    return ExecutionResult(
        status=session.status,
        output=session.output if session.status == SESSION_FINISHED else None,
        error=session.error,
        trace=tuple(session.trace),
        final_globals={k: deep_copy(v) for k, v in session.heap.global_scope.items()},
    )


def suspend_resume_roundtrip(session: Session) -> bool:
    """Debugger pause: capture, serialize, deserialize, and restore the live top.

    Returns False when the top agent is finished (nothing to capture).
    """
    if not session.stack or session.status != SESSION_RUNNING:
        return False
    top = session.stack[-1]
    if isinstance(top, Snapshot) or top.status == FINISHED:
        return False
    snapshot = deserialize(serialize(capture(top, session.step_counter)))
    fn = session.program.function_named(snapshot.id.function_name)
    assert fn is not None
    agent = restore(snapshot, fn)
    session.stack[-1] = agent
    session.heap.register_frame(_agent_scope_key(agent), agent.locals)
    return True


def trace_to_bytes(events: Iterable[TraceEvent]) -> bytes:
    lines = []
    for event in events:
        record = event.to_record() if isinstance(event, TraceEvent) else event
        lines.append(json.dumps(record, sort_keys=True, ensure_ascii=True, separators=(",", ":")))
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def export_trace(
    source: Union[Session, ExecutionResult, Iterable[TraceEvent]],
    sink: Union[str, Path, IO[bytes]],
) -> int:
    """Write the trace as line-delimited JSON records; returns bytes written."""
    if isinstance(source, (Session, ExecutionResult)):
        events: Iterable[TraceEvent] = source.trace
    else:
        events = source
    data = trace_to_bytes(events)
    try:
        if isinstance(sink, (str, Path)):
            Path(sink).write_bytes(data)
        else:
            sink.write(data)
    except OSError as exc:
        raise IoError(f"cannot write trace: {exc}") from exc
    return len(data)


def load_trace(source: Union[str, Path, bytes]) -> list[dict]:
    """Read a line-delimited trace file back into record dicts."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot read trace: {exc}") from exc
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except ValueError as exc:
            raise IoError(f"trace line {line_no} is not valid JSON: {exc}") from exc
    return records
