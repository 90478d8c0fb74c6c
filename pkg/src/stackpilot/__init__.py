"""Agent-stack program execution and verification runtime.

Programs are parsed into a set of functions with labeled lines; every
invocation runs as an isolated agent scheduled on an explicit LIFO stack
with lossless snapshot capture/restore; per-line semantics come from a
pluggable executor (deterministic interpreter, scripted replay, or a
remote model behind an OpenAI-compatible endpoint).
"""

from .agents import (
    Agent,
    CollaborationGraph,
    DONE,
    bind_return,
    derive_collaboration_graph,
    instantiate_agent,
)
from .errors import StackPilotError
from .executors import (
    Action,
    Call,
    ExecContext,
    Fault,
    HeapDelta,
    ReferenceExecutor,
    ReplayExecutor,
    Return,
    ScriptEntry,
    Step,
    action_to_wire,
    load_script,
    parse_action,
    script_from_trace,
)
from .harness import Report, TestCase, feedback_bundle, load_cases, match_output, run_suite
from .model import (
    CallGraph,
    FunctionDef,
    LabeledLine,
    Program,
    annotate_lines,
    build_call_graph,
    extract_functions,
    parse_bundle,
    write_bundle,
)
from .scheduler import (
    ExecutionResult,
    GLOBAL,
    Limits,
    Session,
    TraceEvent,
    create_session,
    export_trace,
    load_trace,
    run,
    step,
    suspend_resume_roundtrip,
    trace_to_bytes,
)
from .snapshots import Snapshot, SnapshotId, capture, deserialize, restore, serialize
from .values import Value

__all__ = [
    "Action",
    "Agent",
    "Call",
    "CallGraph",
    "CollaborationGraph",
    "DONE",
    "ExecContext",
    "ExecutionResult",
    "Fault",
    "FunctionDef",
    "GLOBAL",
    "HeapDelta",
    "LabeledLine",
    "Limits",
    "Program",
    "ReferenceExecutor",
    "ReplayExecutor",
    "Report",
    "Return",
    "ScriptEntry",
    "Session",
    "Snapshot",
    "SnapshotId",
    "StackPilotError",
    "Step",
    "TestCase",
    "TraceEvent",
    "Value",
    "action_to_wire",
    "annotate_lines",
    "bind_return",
    "build_call_graph",
    "capture",
    "create_session",
    "derive_collaboration_graph",
    "deserialize",
    "export_trace",
    "extract_functions",
    "feedback_bundle",
    "instantiate_agent",
    "load_cases",
    "load_script",
    "load_trace",
    "match_output",
    "parse_action",
    "parse_bundle",
    "restore",
    "run",
    "run_suite",
    "script_from_trace",
    "serialize",
    "step",
    "suspend_resume_roundtrip",
    "trace_to_bytes",
    "write_bundle",
]

__version__ = "0.1.0"
