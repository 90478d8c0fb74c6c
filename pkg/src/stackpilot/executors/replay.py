"""Scripted executor: replays a predetermined action sequence.

Each script entry is keyed by (function, appearance index, pointer); a
replayed session must ask for exactly that context next, so any scheduler
regression surfaces as a ScriptMismatch instead of silently diverging.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from ..errors import ParseError, ScriptExhausted, ScriptMismatch
from ..model import Program
from .actions import Action, ExecContext, ExecutorDescriptor, action_to_wire, wire_to_action


@dataclass(frozen=True)
class ScriptEntry:
    function: str
    appearance_index: int
    pointer: str
    action: Action

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.function, self.appearance_index, self.pointer)


class ReplayExecutor:
    descriptor = ExecutorDescriptor(name="replay", deterministic=True)

    def __init__(self, script: Sequence[ScriptEntry]):
        self.script = list(script)
        self.cursor = 0

    def next_step(self, ctx: ExecContext) -> Action:
        if self.cursor >= len(self.script):
            raise ScriptExhausted(f"script exhausted after {len(self.script)} actions")
        entry = self.script[self.cursor]
        key = (ctx.function.name, ctx.appearance_index, ctx.pointer)
        if key != entry.key:
            raise ScriptMismatch(f"context {key} does not match script entry {entry.key}")
        self.cursor += 1
        return entry.action


def script_to_records(script: Iterable[ScriptEntry]) -> list[dict]:
    return [
        {
            "function": e.function,
            "index": e.appearance_index,
            "pointer": e.pointer,
            "action": action_to_wire(e.action),
        }
        for e in script
    ]


def _entry_from_record(record: object, program: Program) -> ScriptEntry:
    if not isinstance(record, dict):
        raise ParseError("script entry must be an object")
    unknown = set(record) - {"function", "index", "pointer", "action"}
    if unknown:
        raise ParseError(f"script entry has unknown fields: {sorted(unknown)}")
    try:
        name = record["function"]
        index = record["index"]
        pointer = record["pointer"]
        action_obj = record["action"]
    except KeyError as exc:
        raise ParseError(f"script entry missing field {exc}") from exc
    fn = program.function_named(name) if isinstance(name, str) else None
    if fn is None:
        raise ParseError(f"script entry names unknown function {name!r}")
    if not isinstance(index, int) or isinstance(index, bool) or index < 1:
        raise ParseError("script entry index must be a positive integer")
    if not isinstance(pointer, str):
        raise ParseError("script entry pointer must be a string")
    return ScriptEntry(
        function=name,
        appearance_index=index,
        pointer=pointer,
        action=wire_to_action(action_obj, fn),
    )


def load_script(source: Union[str, Path, bytes], program: Program) -> list[ScriptEntry]:
    """Load a JSON script file (a list of keyed action records)."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).is_file()):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = str(source)
    try:
        raw = json.loads(text)
    except ValueError as exc:
        raise ParseError(f"script is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ParseError("script must be a JSON list")
    return [_entry_from_record(r, program) for r in raw]


def script_from_trace(trace: Iterable, program: Program) -> list[ScriptEntry]:
    """Rebuild a replay script from a trace: one entry per exec event."""
    entries = []
    for event in trace:
        record = event.to_record() if hasattr(event, "to_record") else event
        if not isinstance(record, dict) or record.get("kind") != "exec":
            continue
        agent = record.get("agent") or {}
        entries.append(
            _entry_from_record(
                {
                    "function": agent.get("name"),
                    "index": agent.get("idx"),
                    "pointer": record.get("line"),
                    "action": record.get("value"),
                },
                program,
            )
        )
    return entries
