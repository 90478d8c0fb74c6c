from __future__ import annotations

import json

import stackpilot as sp
from stackpilot.cli import main

from conftest import FIXTURES_DIR

FACTORIAL = str(FIXTURES_DIR / "factorial.py")
UNION_FIND = str(FIXTURES_DIR / "union_find")
CASES = str(FIXTURES_DIR / "union_find_cases.jsonl")


class TestRun:
    def test_factorial_five(self, capsys):
        code = main(["run", FACTORIAL, "--args", "[5]", "--executor", "reference"])
        assert code == 0
        assert capsys.readouterr().out.strip() == "120"

    def test_missing_bundle(self, capsys):
        code = main(["run", "does/not/exist.py", "--args", "[]"])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_malformed_args(self, capsys):
        code = main(["run", FACTORIAL, "--args", "[5"])
        assert code == 2

    def test_step_limit_exit_code(self, capsys):
        code = main(
            ["run", str(FIXTURES_DIR / "loop_forever.py"), "--args", "[]", "--max-steps", "5"]
        )
        assert code == 3
        assert "StepLimitExceeded" in capsys.readouterr().err

    def test_depth_limit_exit_code(self, tmp_path, capsys):
        bundle = tmp_path / "rec.py"
        bundle.write_text("def main():\n    return main()\n")
        code = main(["run", str(bundle), "--args", "[]", "--max-depth", "10"])
        assert code == 3

    def test_trace_out(self, tmp_path, capsys):
        out = tmp_path / "trace.jsonl"
        code = main(["run", FACTORIAL, "--args", "[3]", "--trace-out", str(out)])
        assert code == 0
        assert sp.load_trace(out)[-1]["kind"] == "pop"

    def test_replay_needs_script(self, capsys):
        code = main(["run", FACTORIAL, "--args", "[3]", "--executor", "replay"])
        assert code == 2

    def test_replay_executor_via_script(self, tmp_path, capsys):
        program = sp.parse_bundle(FACTORIAL)
        base = sp.run(program, [3], sp.ReferenceExecutor())
        from stackpilot.executors.replay import script_to_records

        script_path = tmp_path / "script.json"
        script_path.write_text(
            json.dumps(script_to_records(sp.script_from_trace(base.trace, program)))
        )
        code = main(
            ["run", FACTORIAL, "--args", "[3]", "--executor", "replay", "--script", str(script_path)]
        )
        assert code == 0
        assert capsys.readouterr().out.strip() == "6"

    def test_llm_without_env_is_executor_error(self, capsys, monkeypatch):
        monkeypatch.delenv("STACKPILOT_API_KEY", raising=False)
        code = main(["run", FACTORIAL, "--args", "[3]", "--executor", "llm"])
        assert code == 4


class TestEval:
    def test_union_find_suite(self, capsys):
        code = main(["eval", UNION_FIND, CASES, "--executor", "reference", "--max-steps", "100000"])
        assert code == 0
        out = capsys.readouterr().out
        assert "accuracy 100.0% (3/3)" in out
        assert "stackpilot" in out

    def test_empty_case_file(self, tmp_path, capsys):
        empty = tmp_path / "cases.jsonl"
        empty.write_text("")
        code = main(["eval", UNION_FIND, str(empty)])
        assert code == 2

    def test_judge_without_key_falls_back(self, capsys, monkeypatch):
        monkeypatch.delenv("STACKPILOT_API_KEY", raising=False)
        code = main(
            [
                "eval",
                UNION_FIND,
                CASES,
                "--matcher",
                "judge",
                "--max-steps",
                "100000",
            ]
        )
        captured = capsys.readouterr()
        assert code == 0
        assert "warning" in captured.err
        assert "accuracy 100.0%" in captured.out

    def test_report_out(self, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = main(
            [
                "eval",
                UNION_FIND,
                CASES,
                "--max-steps",
                "100000",
                "--report-out",
                str(report_path),
            ]
        )
        assert code == 0
        record = json.loads(report_path.read_text())
        assert record["accuracy"] == {"num": 1, "den": 1, "passed": 3, "total": 3}
        assert record["mode"] == "stackpilot"

    def test_failing_case_still_exits_zero(self, tmp_path, capsys):
        bad_cases = tmp_path / "cases.jsonl"
        bad_cases.write_text('{"id": "x", "entry_args": [[2, 3, 6]], "expected": false}\n')
        code = main(["eval", UNION_FIND, str(bad_cases), "--max-steps", "100000"])
        assert code == 0
        assert "0.0%" in capsys.readouterr().out
