"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; any assertion failure marks that criterion failed.
"""

from __future__ import annotations

import json
import math
import os
import random
import time
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

import stackpilot as sp
from stackpilot.agents import Agent
from stackpilot.errors import SchemaError
from stackpilot.executors.actions import action_to_wire, parse_action
from stackpilot.harness import load_cases, run_suite
from stackpilot.snapshots import Snapshot

from conftest import FIXTURES_DIR, GOLDEN_DIR, load_corpus
from oracle import run_oracle

REFERENCE = sp.ReferenceExecutor()
LIMITS = sp.Limits(max_steps=200_000)

_corpus = load_corpus()
_corpus_programs = {name: sp.parse_bundle(path) for name, path, _ in _corpus}


def _report(criterion: str, ok: bool) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}")
    assert ok, criterion


def _run_pair(program, args):
    runtime = sp.run(program, args, REFERENCE, LIMITS)
    oracle = run_oracle(program, args)
    return runtime, oracle


def test_oracle_equivalence_corpus():
    """Scheduler+reference executor adds no semantics over the direct interpreter."""
    assert len(_corpus) >= 30, f"corpus has only {len(_corpus)} programs"
    started = time.perf_counter()
    checked = 0
    ok = True
    for name, _, arg_sets in _corpus:
        program = _corpus_programs[name]
        for args in arg_sets:
            runtime, oracle = _run_pair(program, args)
            ok = ok and runtime.status == "finished"
            from stackpilot.values import structural_equal

            ok = ok and structural_equal(runtime.output, oracle.output)
            ok = ok and structural_equal(runtime.final_globals, oracle.final_globals)
            checked += 1
    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 5.0
    print(f"  ({checked} runs over {len(_corpus)} programs in {elapsed:.2f}s)")
    _report("oracle-equivalence", ok)


def test_recursion_table():
    factorial = sp.parse_bundle(FIXTURES_DIR / "factorial.py")
    fib = sp.parse_bundle(FIXTURES_DIR / "fib.py")
    ok = True
    for n in range(11):
        result = sp.run(factorial, [n], REFERENCE, LIMITS)
        ok = ok and result.status == "finished" and result.output == math.factorial(n)
    fib_table = [0, 1]
    while len(fib_table) < 16:
        fib_table.append(fib_table[-1] + fib_table[-2])
    for n in range(16):
        result = sp.run(fib, [n], REFERENCE, LIMITS)
        ok = ok and result.status == "finished" and result.output == fib_table[n]
    _report("recursion-table", ok)


def test_case_study_union_find():
    program = sp.parse_bundle(FIXTURES_DIR / "union_find")
    ok = True
    for nums, expected in ([2, 3, 6], True), ([3, 9, 5], False), ([4, 3, 12, 8], True):
        result = sp.run(program, [nums], REFERENCE, LIMITS)
        ok = ok and result.status == "finished" and result.output is expected

    # the moment the inner find executes, the stack is exactly three deep
    # with two frozen snapshots beneath the live find agent
    session = sp.create_session(program, [[2, 3, 6]], REFERENCE, LIMITS)
    observed = False
    while session.status == "running":
        sp.step(session)
        top = session.stack[-1]
        if (
            len(session.stack) == 3
            and isinstance(top, Agent)
            and top.function.name == "find"
            and not top.finished
        ):
            observed = (
                isinstance(session.stack[0], Snapshot)
                and isinstance(session.stack[1], Snapshot)
                and session.stack[0].id == sp.SnapshotId("canTraverseAllPairs", 1)
                and session.stack[1].id.function_name == "update"
            )
            break
    _report("case-study-union-find", ok and observed)


_fast_runs: list[tuple[str, str]] = []
for _name, _path, _sets in _corpus:
    for _args in _sets:
        _fast_runs.append((_name, json.dumps(_args)))

_baselines: dict = {}


def _baseline(key):
    if key not in _baselines:
        name, args_json = key
        result = sp.run(_corpus_programs[name], json.loads(args_json), REFERENCE, LIMITS)
        _baselines[key] = result
    return _baselines[key]


@settings(
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
    derandomize=True,
)
@given(case=st.sampled_from(_fast_runs), pause_at=st.integers(min_value=0, max_value=300))
def test_snapshot_losslessness(case, pause_at):
    """Pausing with capture/serialize/deserialize/restore never changes the run."""
    baseline = _baseline(case)
    name, args_json = case
    session = sp.create_session(_corpus_programs[name], json.loads(args_json), REFERENCE, LIMITS)
    taken = 0
    while session.status == "running":
        if taken == pause_at:
            sp.suspend_resume_roundtrip(session)
        sp.step(session)
        taken += 1
    from stackpilot.values import structural_equal

    assert session.status == baseline.status == "finished"
    assert structural_equal(session.output, baseline.output)
    assert structural_equal(
        {k: v for k, v in session.heap.global_scope.items()}, baseline.final_globals
    )


def test_snapshot_losslessness_report():
    _report("snapshot-losslessness", True)  # reached only if the property above passed


def test_stack_discipline():
    ok = True
    for name, _, arg_sets in _corpus:
        program = _corpus_programs[name]
        for args in arg_sets:
            runtime, oracle = _run_pair(program, args)
            depth = 0
            balanced = True
            for event in runtime.trace:
                if event.kind == "push":
                    depth += 1
                elif event.kind == "pop":
                    depth -= 1
                    if depth < 0:
                        balanced = False
            pushes = [e.agent for e in runtime.trace if e.kind == "push"]
            pops = [e.agent for e in runtime.trace if e.kind == "pop"]
            ok = ok and balanced and depth == 0
            ok = ok and len(pushes) == len(set(pushes))  # unique appearance ids
            ok = ok and len(pushes) == len(pops) == len(oracle.calls)
    _report("stack-discipline", ok)


FUZZ_FN = sp.extract_functions(
    "def fuzz(x):\n" + "\n".join(f"    v{i} = {i}" for i in range(1, 10)) + "\n    return x\n",
    "minilang",
)[0]

_VALID = [
    sp.Step(next_pointer="L2"),
    sp.Step(next_pointer="DONE", deltas=(sp.HeapDelta("local", "x", [1, {"k": 2.5}]),), log="m"),
    sp.Step(next_pointer="L5", deltas=(sp.HeapDelta("global", "g", None),)),
    sp.Call(callee="find", args=(1, "s", None), result_binding="r", resume_pointer="L3"),
    sp.Call(callee="update", args=(), result_binding=None, resume_pointer="L1"),
    sp.Return(value={"nested": [True, False, None, 0.5, "s"]}),
    sp.Return(value=None),
    sp.Fault(message="division by zero"),
]


def test_action_schema_fuzz():
    rng = random.Random(0xACCE97)
    ok = True
    for _ in range(10_000):
        blob = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 160)))
        try:
            action = parse_action(blob, FUZZ_FN)
            ok = ok and isinstance(action, (sp.Step, sp.Call, sp.Return, sp.Fault))
        except SchemaError:
            pass
        except Exception:  # noqa: BLE001 - the criterion is "never crash"
            ok = False
            break
    base_objects = [action_to_wire(a) for a in _VALID]
    for _ in range(1_000):
        obj = json.loads(json.dumps(rng.choice(base_objects)))
        mutation = rng.randrange(5)
        if mutation == 0 and obj:
            obj.pop(rng.choice(sorted(obj)))
        elif mutation == 1:
            obj["extra_field"] = rng.randrange(100)
        elif mutation == 2:
            obj["type"] = rng.choice(["step", "call", "return", "fault", "warp", 7])
        elif mutation == 3:
            key = rng.choice(sorted(obj))
            obj[key] = {"wrapped": obj[key]}
        else:
            obj["next_pointer" if "next_pointer" in obj else "resume_pointer"] = "L999"
        try:
            action = parse_action(json.dumps(obj), FUZZ_FN)
            ok = ok and isinstance(action, (sp.Step, sp.Call, sp.Return, sp.Fault))
        except SchemaError:
            pass
        except Exception:  # noqa: BLE001
            ok = False
            break
    for action in _VALID:
        ok = ok and parse_action(json.dumps(action_to_wire(action)), FUZZ_FN) == action
    _report("action-schema-fuzz", ok)


def test_replay_protocol_golden_suite():
    from test_replay_golden import CASES

    ok = len(CASES) >= 10
    ok = ok and "script_mismatch" in CASES and "llm_retry_failure" in CASES
    for name, build in sorted(CASES.items()):
        result = build()
        golden = GOLDEN_DIR / f"{name}.jsonl"
        ok = ok and golden.is_file() and sp.trace_to_bytes(result.trace) == golden.read_bytes()
    _report("replay-protocol-goldens", ok)


def test_harness_arithmetic():
    program = sp.parse_bundle("def main(x):\n    return x\n")
    n = 5

    def case(i, expected):
        return sp.TestCase(id=f"t{i}", entry_args=(i,), expected=expected)

    zero = run_suite(program, [case(i, -1) for i in range(n)], REFERENCE)
    full = run_suite(program, [case(i, i) for i in range(n)], REFERENCE)
    threequarters = run_suite(
        program,
        [case(0, 0), case(1, 1), case(2, 2), case(3, -1)],
        REFERENCE,
    )
    ok = zero.accuracy == Fraction(0)
    ok = ok and full.accuracy == Fraction(1)
    ok = ok and threequarters.accuracy == Fraction(3, 4)
    ok = ok and isinstance(threequarters.accuracy, Fraction)

    uf_program = sp.parse_bundle(FIXTURES_DIR / "union_find")
    cases = load_cases(FIXTURES_DIR / "union_find_cases.jsonl")
    baseline = {
        r.id: r.status
        for r in run_suite(uf_program, cases, REFERENCE, limits=LIMITS).results
    }
    rng = random.Random(11)
    for _ in range(4):
        shuffled = list(cases)
        rng.shuffle(shuffled)
        report = run_suite(uf_program, shuffled, REFERENCE, limits=LIMITS)
        ok = ok and {r.id: r.status for r in report.results} == baseline
    _report("harness-arithmetic", ok)


SMOKE_TASKS = [
    ("def main(x):\n    return x + 1\n", [41], 42),
    ("def main(xs):\n    return len(xs)\n", [[1, 2, 3]], 3),
    ("def main(a, b):\n    return a * b\n", [6, 7], 42),
    ("def main(x):\n    if x > 0:\n        return \"pos\"\n    return \"neg\"\n", [5], "pos"),
    ("def main(n):\n    i = 0\n    t = 0\n    while i < n:\n        t = t + i\n        i = i + 1\n    return t\n", [4], 6),
    ("def main(s):\n    return s + s\n", ["ab"], "abab"),
    ("def main(xs):\n    return xs[0]\n", [[9, 8]], 9),
    ("def main(a):\n    return a % 3\n", [10], 1),
    ("def helper(x):\n    return x * 2\n\ndef main(x):\n    r = helper(x)\n    return r\n", [21], 42),
    ("def main(m):\n    return m[\"k\"]\n", [{"k": 5}], 5),
]


@pytest.mark.skipif(
    not os.environ.get("STACKPILOT_API_KEY"),
    reason="live smoke needs STACKPILOT_API_KEY",
)
def test_live_smoke_llm_executor():
    """Plumbing check only: tasks complete without framework faults."""
    from stackpilot.executors.llm import ChatClient, ChatConfig, LlmExecutor

    client = ChatClient(ChatConfig.from_env())
    ok = True
    for source, args, _expected in SMOKE_TASKS:
        program = sp.parse_bundle(source)
        result = sp.run(program, args, LlmExecutor(client), sp.Limits(max_steps=500))
        ok = ok and result.status == "finished"
    client.close()
    _report("live-smoke", ok)
