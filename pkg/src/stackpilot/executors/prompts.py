"""Deterministic prompt rendering for the remote-model executor."""

from __future__ import annotations

from ..agents import _Unset
from ..values import render
from .actions import ExecContext

_ROLE = (
    "You are the execution engine for exactly one function of a program. "
    "You see the function's source with one label per line, the current "
    "execution pointer, and every variable you are allowed to read. "
    "Simulate only the single line at the pointer and reply with exactly "
    "one JSON action object and nothing else."
)

_SCHEMA = """\
Reply with one of these JSON objects:
- advance within this function, optionally changing variables:
  {"type":"step","next_pointer":"L2","deltas":[{"scope":"local","name":"x","value":3}],"log":"optional note"}
  Use scope "global" only for names declared global. Use "next_pointer":"DONE"
  to end the function with an implicit null return.
- call another function (stop before the call happens; args fully evaluated):
  {"type":"call","callee":"find","args":[1,2],"result_binding":"r","resume_pointer":"L9"}
  Use "result_binding":null when the value is discarded.
- return from this function:
  {"type":"return","value":120}
- report that the line cannot be executed:
  {"type":"fault","message":"division by zero"}"""


def _table(title: str, mapping) -> list[str]:
    lines = [title]
    if not mapping:
        lines.append("  (none)")
        return lines
    for name in sorted(mapping):
        lines.append(f"  {name} = {render(mapping[name])}")
    return lines


def render_prompt(ctx: ExecContext) -> str:
    """Pure function of the context; identical contexts render byte-identical prompts."""
    fn = ctx.function
    parts: list[str] = [_ROLE, ""]
    parts.append(f"Function {fn.name}({', '.join(fn.params)}) [invocation #{ctx.appearance_index}]:")
    for header_line in fn.header.split("\n"):
        parts.append(f"     | {header_line}")
    for line in fn.body:
        marker = ">" if line.label == ctx.pointer else " "
        parts.append(f"{marker}{line.label:>4} | {line.text}")
    parts.append("")
    parts.append(f"Execution pointer: {ctx.pointer}")
    parts.extend(_table("Local variables:", ctx.locals))
    parts.extend(_table("Visible globals:", ctx.visible_globals))
    if not isinstance(ctx.just_returned, _Unset):
        parts.append(f"A call just returned: {render(ctx.just_returned)}")
    if ctx.logs_tail:
        parts.append("Recent log entries:")
        for entry in ctx.logs_tail:
            parts.append(f"  {entry}")
    parts.append("")
    parts.append(_SCHEMA)
    parts.append("")
    parts.append("Emit exactly one action object for the pointed-to line.")
    return "\n".join(parts)
