"""Batch verification: run suites of test cases and report exact accuracy.

Each case runs in a fresh session (fresh heap, fresh appearance counters).
The default matcher normalizes formatting noise — whitespace, float
rendering, boolean casing — before structural comparison; an opt-in judge
mode asks a remote model for a yes/no verdict and degrades to normalized
matching on transport errors. Accuracy is an exact rational.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence, Union

from .errors import ParseError, StackPilotError, TransportError, UnknownCase
from .executors.llm import ChatClient, extract_action_text
from .model import Program
from .scheduler import ExecutionResult, Limits, TraceEvent, run, trace_to_bytes
from .values import Value, ensure_value, render

MODES = ("stackpilot", "vanilla", "cot", "iip")
MATCHERS = ("normalized", "judge")

_WORD_RE = re.compile(r"^[A-Za-z]+$")


@dataclass(frozen=True)
class TestCase:
    id: str
    entry_args: tuple[Value, ...]
    expected: Value


@dataclass
class CaseResult:
    id: str
    status: str  # pass | fail | error
    actual: Value
    expected: Value
    error: str | None = None
    matcher_note: str | None = None
    trace: tuple[TraceEvent, ...] = ()
    trace_path: str | None = None
    final_globals: dict[str, Value] = field(default_factory=dict)


@dataclass
class Report:
    results: list[CaseResult]
    accuracy: Fraction
    mode: str
    model: str
    matcher: str
    suite: str = "suite"

    @property
    def passed(self) -> int:
        return sum(1 for r in self.results if r.status == "pass")

    def to_record(self) -> dict:
        return {
            "cases": [
                {
                    "id": r.id,
                    "status": r.status,
                    "actual": r.actual,
                    "expected": r.expected,
                    "error": r.error,
                    "matcher_note": r.matcher_note,
                    "trace_path": r.trace_path,
                }
                for r in self.results
            ],
            "accuracy": {
                "num": self.accuracy.numerator,
                "den": self.accuracy.denominator,
                "passed": self.passed,
                "total": len(self.results),
            },
            "mode": self.mode,
            "model": self.model,
            "matcher": self.matcher,
            "suite": self.suite,
        }

    def summary_table(self) -> str:
        percent = float(self.accuracy) * 100.0
        header = f"{'method':<12} {'suite':<24} {'accuracy':>9}"
        row = f"{self.mode:<12} {self.suite:<24} {percent:>8.1f}%"
        return header + "\n" + row


def load_cases(path: Union[str, Path]) -> list[TestCase]:
    """Load line-delimited case records {id, entry_args, expected}."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read case file {path}: {exc}") from exc
    cases: list[TestCase] = []
    seen: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except ValueError as exc:
            raise ParseError(f"case line {line_no} is not valid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise ParseError(f"case line {line_no} must be an object")
        unknown = set(record) - {"id", "entry_args", "expected"}
        if unknown:
            raise ParseError(f"case line {line_no} has unknown fields: {sorted(unknown)}")
        if "id" not in record or "entry_args" not in record or "expected" not in record:
            raise ParseError(f"case line {line_no} is missing id, entry_args, or expected")
        case_id = record["id"]
        if not isinstance(case_id, str) or not case_id:
            raise ParseError(f"case line {line_no}: id must be a non-empty string")
        if case_id in seen:
            raise ParseError(f"case line {line_no}: duplicate id {case_id!r}")
        seen.add(case_id)
        args = record["entry_args"]
        if not isinstance(args, list):
            raise ParseError(f"case {case_id}: entry_args must be a list")
        cases.append(
            TestCase(
                id=case_id,
                entry_args=tuple(ensure_value(a, f"{case_id}.entry_args") for a in args),
                expected=ensure_value(record["expected"], f"{case_id}.expected"),
            )
        )
    return cases


def _reject_nonfinite(name: str) -> None:
    raise ValueError(f"non-finite literal {name}")


def normalize_output(value: Value) -> Value:
    """Fold formatting noise: strip strings and re-parse them as literals."""
    if isinstance(value, str):
        text = value.strip()
        folded = {"true": "true", "false": "false", "none": "null", "null": "null"}.get(
            text.lower()
        )
        candidate = folded if folded is not None and _WORD_RE.match(text) else text
        try:
            return json.loads(candidate, parse_constant=_reject_nonfinite)
        except ValueError:
            return text
    return value


def _loose_equal(a: Value, b: Value) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_loose_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_loose_equal(a[k], b[k]) for k in a)
    if type(a) is not type(b):
        return False
    return a == b


def normalized_match(expected: Value, actual: Value) -> bool:
    return _loose_equal(normalize_output(expected), normalize_output(actual))


_JUDGE_PROMPT = (
    "You compare program outputs. Expected output:\n{expected}\n\n"
    "Actual output:\n{actual}\n\n"
    "Do these represent the same result, ignoring formatting differences? "
    "Answer with exactly one word: yes or no."
)


def judge_match(expected: Value, actual: Value, client: ChatClient) -> bool:
    reply = client.complete(
        [
            {
                "role": "user",
                "content": _JUDGE_PROMPT.format(expected=render(expected), actual=render(actual)),
            }
        ]
    )
    return reply.strip().lower().startswith("yes")


def match_output(
    expected: Value,
    actual: Value,
    mode: str = "normalized",
    judge_client: ChatClient | None = None,
) -> bool:
    """Compare outputs; judge mode falls back to normalized on transport errors."""
    if mode == "judge" and judge_client is not None:
        try:
            return judge_match(expected, actual, judge_client)
        except TransportError:
            return normalized_match(expected, actual)
    return normalized_match(expected, actual)


def _run_one_case(
    program: Program,
    case: TestCase,
    executor: object,
    mode: str,
    matcher: str,
    judge_client: ChatClient | None,
    limits: Limits | None,
    client: ChatClient | None,
) -> CaseResult:
    if mode == "stackpilot":
        try:
            result: ExecutionResult = run(program, list(case.entry_args), executor, limits)
        except StackPilotError as exc:
            return CaseResult(
                id=case.id,
                status="error",
                actual=None,
                expected=case.expected,
                error=f"{exc.code}: {exc}",
            )
        if result.status != "finished":
            return CaseResult(
                id=case.id,
                status="error",
                actual=None,
                expected=case.expected,
                error=result.error,
                trace=result.trace,
                final_globals=result.final_globals,
            )
        actual = result.output
        trace = result.trace
        final_globals = result.final_globals
    else:
        if client is None:
            return CaseResult(
                id=case.id,
                status="error",
                actual=None,
                expected=case.expected,
                error=f"mode {mode!r} needs a configured model client",
            )
        try:
            actual = run_whole_program(mode, program, list(case.entry_args), client)
        except (TransportError, ValueError) as exc:
            return CaseResult(
                id=case.id, status="error", actual=None, expected=case.expected, error=str(exc)
            )
        trace = ()
        final_globals = {}
    note = None
    if matcher == "judge" and judge_client is None:
        note = "judge matcher unavailable, used normalized"
    ok = match_output(case.expected, actual, matcher, judge_client)
    return CaseResult(
        id=case.id,
        status="pass" if ok else "fail",
        actual=actual,
        expected=case.expected,
        matcher_note=note,
        trace=trace,
        final_globals=final_globals,
    )


def run_suite(
    program: Program,
    cases: Sequence[TestCase],
    executor: object = None,
    mode: str = "stackpilot",
    matcher: str = "normalized",
    judge_client: ChatClient | None = None,
    limits: Limits | None = None,
    workers: int = 1,
    trace_dir: Union[str, Path, None] = None,
    executor_factory: Callable[[], object] | None = None,
    client: ChatClient | None = None,
    model: str = "reference",
    suite: str = "suite",
) -> Report:
    """Run every case in its own fresh session and assemble the report."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if matcher not in MATCHERS:
        raise ValueError(f"unknown matcher {matcher!r}")
    if not cases:
        raise ParseError("case list is empty")

    def one(case: TestCase) -> CaseResult:
        case_executor = executor_factory() if executor_factory is not None else executor
        return _run_one_case(program, case, case_executor, mode, matcher, judge_client, limits, client)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, cases))
    else:
        results = [one(case) for case in cases]

    if trace_dir is not None:
        trace_dir = Path(trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for result in results:
            if result.trace:
                path = trace_dir / f"{result.id}.trace.jsonl"
                path.write_bytes(trace_to_bytes(result.trace))
                result.trace_path = str(path)

    passed = sum(1 for r in results if r.status == "pass")
    return Report(
        results=results,
        accuracy=Fraction(passed, len(results)),
        mode=mode,
        model=model,
        matcher=matcher,
        suite=suite,
    )


def feedback_bundle(report: Report, case_id: str, tail: int = 50) -> str:
    """Render one case's outcome, trace tail, and final heap for re-prompting."""
    for result in report.results:
        if result.id == case_id:
            break
    else:
        raise UnknownCase(f"no case {case_id!r} in this report")
    lines = [f"case {result.id}: {result.status}"]
    if result.status == "pass":
        lines.append(f"output {render(result.actual)} matched the expected value.")
        return "\n".join(lines)
    lines.append("mismatch summary:")
    lines.append(f"  expected: {render(result.expected)}")
    lines.append(f"  actual:   {render(result.actual)}")
    if result.error:
        lines.append(f"  error:    {result.error}")
    lines.append(f"final globals: {render(result.final_globals)}")
    if result.trace:
        events = result.trace[-tail:]
        lines.append(f"last {len(events)} trace events:")
        for event in events:
            lines.append(
                "  "
                + json.dumps(event.to_record(), sort_keys=True, ensure_ascii=True, separators=(",", ":"))
            )
    return "\n".join(lines)


# whole-program baseline strategies (no scheduler involved)


def _program_source(program: Program) -> str:
    chunks = []
    for fn in program.functions:
        body = "\n".join(line.text for line in fn.body)
        chunks.append(f"{fn.header}\n{body}")
    return "\n\n".join(chunks)


def _parse_final_value(reply: str) -> Value:
    candidate = extract_action_text(reply)
    try:
        return ensure_value(json.loads(candidate))
    except ValueError:
        return candidate


def run_whole_program(mode: str, program: Program, args: list[Value], client: ChatClient) -> Value:
    """Prompt-only execution strategies used as report baselines."""
    source = _program_source(program)
    call = f"{program.entry}({', '.join(render(a) for a in args)})"
    if mode == "vanilla":
        prompt = (
            "Execute this program mentally and output only the final result of "
            f"{call} as a JSON value.\n\n{source}\n"
        )
        return _parse_final_value(client.complete([{"role": "user", "content": prompt}]))
    if mode == "cot":
        prompt = (
            f"Work through this program step by step, then give the result of {call}. "
            "Think out loud first; finish with the final result as a JSON value in a "
            f"fenced code block.\n\n{source}\n"
        )
        return _parse_final_value(client.complete([{"role": "user", "content": prompt}]))
    if mode == "iip":
        entry = program.entry_function
        state = f"about to execute {call}"
        for line in entry.body:
            prompt = (
                "You are executing a program one line at a time.\n"
                f"Program:\n{source}\n\n"
                f"State so far: {state}\n"
                f"Next line of {entry.name}: {line.label} | {line.text}\n"
                "Describe the updated state in one short paragraph."
            )
            state = client.complete([{"role": "user", "content": prompt}]).strip()
        prompt = (
            f"Given this final state of executing {call}:\n{state}\n\n"
            "Output only the program's final result as a JSON value."
        )
        return _parse_final_value(client.complete([{"role": "user", "content": prompt}]))
    raise ValueError(f"unknown baseline mode {mode!r}")
