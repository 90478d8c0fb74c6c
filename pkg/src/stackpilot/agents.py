"""Live function invocations as isolated agents.

An Agent owns the private state of exactly one invocation: argument
bindings, locals, the execution pointer, logs, and the eventual output.
Agents interact only through call arguments and returned values; the
dynamic record of those transfers is the collaboration graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import ArityMismatch, MalformedTrace, NoPendingCall
from .model import FunctionDef
from .values import Value, deep_copy, display

DONE = "DONE"

READY = "ready"
RUNNING = "running"
SUSPENDED = "suspended"
FINISHED = "finished"


class _Unset:
    _instance = None

    def __new__(cls) -> "_Unset":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "<unset>"


UNSET = _Unset()

AgentId = tuple[str, int]


@dataclass
class Agent:
    """One live invocation of a function."""

    function: FunctionDef
    appearance_index: int
    input: tuple[Value, ...]
    locals: dict[str, Value]
    pointer: str
    logs: list[str] = field(default_factory=list)
    output: Value | _Unset = UNSET
    status: str = READY
    pending_result_binding: str | None = None
    has_pending_call: bool = False
    just_returned: Value | _Unset = UNSET

    @property
    def id(self) -> AgentId:
        return (self.function.name, self.appearance_index)

    @property
    def finished(self) -> bool:
        return self.status == FINISHED

    def finish(self, value: Value) -> None:
        self.output = deep_copy(value)
        self.pointer = DONE
        self.status = FINISHED


def instantiate_agent(function: FunctionDef, args: Iterable[Value], appearance_index: int) -> Agent:
    """Create a ready agent with params bound positionally to copied args."""
    args = tuple(args)
    if len(args) != len(function.params):
        raise ArityMismatch(
            f"{function.name} takes {len(function.params)} argument(s), got {len(args)}"
        )
    if appearance_index < 1:
        raise ValueError("appearance_index must be positive")
    bound = tuple(deep_copy(a) for a in args)
    return Agent(
        function=function,
        appearance_index=appearance_index,
        input=bound,
        locals={name: deep_copy(v) for name, v in zip(function.params, bound)},
        pointer="L1",
    )


def bind_return(caller: Agent, value: Value) -> Agent:
    """Deliver a callee's return value into the suspended caller."""
    if caller.status != SUSPENDED or not caller.has_pending_call:
        raise NoPendingCall(f"agent {caller.id} has no pending call")
    if caller.pending_result_binding is not None:
        caller.locals[caller.pending_result_binding] = deep_copy(value)
    else:
        caller.logs.append(f"discarded return: {display(value)}")
    caller.just_returned = deep_copy(value)
    caller.pending_result_binding = None
    caller.has_pending_call = False
    caller.status = RUNNING
    return caller


CALL_ARGS = "call_args"
RETURN_VALUE = "return_value"


@dataclass(frozen=True)
class CollabEdge:
    src: AgentId
    dst: AgentId
    role: str


@dataclass(frozen=True)
class CollaborationGraph:
    """Dynamic graph of realized cross-agent value transfers."""

    nodes: tuple[AgentId, ...]
    edges: tuple[CollabEdge, ...]


def _event_fields(event) -> tuple[str, AgentId | None]:
    if isinstance(event, dict):
        kind = event.get("kind")
        raw = event.get("agent")
        agent = (raw["name"], raw["idx"]) if isinstance(raw, dict) else None
    else:
        kind = getattr(event, "kind", None)
        agent = getattr(event, "agent", None)
    if not isinstance(kind, str):
        raise MalformedTrace("trace event without a kind")
    return kind, agent


def derive_collaboration_graph(trace: Iterable) -> CollaborationGraph:
    """Rebuild the collaboration graph from push/pop/call/return events."""
    stack: list[AgentId] = []
    nodes: list[AgentId] = []
    edges: list[CollabEdge] = []
    pending_caller: AgentId | None = None
    for event in trace:
        kind, agent = _event_fields(event)
        if kind == "push":
            if agent is None:
                raise MalformedTrace("push event without an agent")
            nodes.append(agent)
            if pending_caller is not None:
                edges.append(CollabEdge(src=pending_caller, dst=agent, role=CALL_ARGS))
                pending_caller = None
            stack.append(agent)
        elif kind == "call":
            if agent is None:
                raise MalformedTrace("call event without an agent")
            pending_caller = agent
        elif kind == "return":
            if not stack or stack[-1] != agent:
                raise MalformedTrace(f"return event for {agent} does not match stack top")
            if len(stack) >= 2:
                edges.append(CollabEdge(src=agent, dst=stack[-2], role=RETURN_VALUE))
        elif kind == "pop":
            if not stack:
                raise MalformedTrace("pop event on an empty stack")
            if stack[-1] != agent:
                raise MalformedTrace(f"pop event for {agent} does not match stack top")
            stack.pop()
    if stack:
        raise MalformedTrace("trace ended with unbalanced push/pop events")
    return CollaborationGraph(nodes=tuple(nodes), edges=tuple(edges))
