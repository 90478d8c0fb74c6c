"""Command-line entry points: run one bundle, evaluate a suite, serve the debugger.

Exit codes: 0 success, 2 parse problems (bundle, args, case file),
3 runtime failures (faults, limits), 4 executor failures (schema retries
exhausted, transport errors).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .debug_service import DebugService, make_server
from .errors import ArityMismatch, ParseError, StackPilotError, TransportError
from .executors.llm import ChatClient, ChatConfig, LlmExecutor
from .executors.reference import ReferenceExecutor
from .executors.replay import ReplayExecutor, load_script
from .harness import load_cases, run_suite
from .model import parse_bundle
from .scheduler import Limits, export_trace, run
from .values import render

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_RUNTIME = 3
EXIT_EXECUTOR = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stackpilot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("bundle", help="bundle directory, bundle.json, or a single source file")
        p.add_argument(
            "--executor",
            choices=("reference", "llm", "replay"),
            default="reference",
        )
        p.add_argument("--model", default=None, help="model name for --executor llm")
        p.add_argument("--base-url", default=None, help="endpoint base URL for --executor llm")
        p.add_argument("--script", default=None, help="action script for --executor replay")
        p.add_argument("--max-steps", type=int, default=10_000)
        p.add_argument("--max-depth", type=int, default=256)

    p_run = sub.add_parser("run", help="run a bundle once and print its output")
    add_common(p_run)
    p_run.add_argument("--args", default="[]", help="entry arguments as a JSON list")
    p_run.add_argument("--trace-out", default=None, help="write the trace to this file")

    p_eval = sub.add_parser("eval", help="run a case suite and report accuracy")
    add_common(p_eval)
    p_eval.add_argument("cases", help="line-delimited case file {id, entry_args, expected}")
    p_eval.add_argument("--mode", choices=("stackpilot", "vanilla", "cot", "iip"), default="stackpilot")
    p_eval.add_argument("--matcher", choices=("normalized", "judge"), default="normalized")
    p_eval.add_argument("--workers", type=int, default=1)
    p_eval.add_argument("--report-out", default=None, help="write the machine-readable report here")
    p_eval.add_argument("--trace-dir", default=None, help="write per-case traces into this directory")

    p_debug = sub.add_parser("debug", help="serve the interactive debug protocol")
    add_common(p_debug)
    p_debug.add_argument("--args", default="[]", help="entry arguments as a JSON list")
    p_debug.add_argument("--host", default="127.0.0.1")
    p_debug.add_argument("--port", type=int, default=8765)

    return parser


def _parse_entry_args(raw: str) -> list:
    try:
        args = json.loads(raw)
    except ValueError as exc:
        raise ParseError(f"--args is not valid JSON: {exc}") from exc
    if not isinstance(args, list):
        raise ParseError("--args must be a JSON list")
    return args


def _chat_client(ns: argparse.Namespace) -> ChatClient:
    return ChatClient(ChatConfig.from_env(model=ns.model, base_url=ns.base_url))


def _make_executor(ns: argparse.Namespace, program):
    if ns.executor == "reference":
        return ReferenceExecutor()
    if ns.executor == "llm":
        return LlmExecutor(_chat_client(ns))
    if ns.script is None:
        raise ParseError("--executor replay needs --script")
    return ReplayExecutor(load_script(Path(ns.script), program))


def _limits(ns: argparse.Namespace) -> Limits:
    return Limits(max_steps=ns.max_steps, max_stack_depth=ns.max_depth)


def _cmd_run(ns: argparse.Namespace) -> int:
    program = parse_bundle(ns.bundle)
    executor = _make_executor(ns, program)
    try:
        result = run(program, _parse_entry_args(ns.args), executor, _limits(ns))
    except ArityMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if ns.trace_out:
        export_trace(result, ns.trace_out)
        print(f"trace written to {ns.trace_out}", file=sys.stderr)
    if result.status == "finished":
        print(render(result.output))
        return EXIT_OK
    print(f"error: {result.error}", file=sys.stderr)
    if result.error and result.error.startswith(("ExecutorFailure", "TransportError", "Timeout")):
        return EXIT_EXECUTOR
    return EXIT_RUNTIME


def _cmd_eval(ns: argparse.Namespace) -> int:
    program = parse_bundle(ns.bundle)
    cases = load_cases(ns.cases)
    if not cases:
        print("error: case file is empty", file=sys.stderr)
        return EXIT_PARSE

    judge_client = None
    client = None
    model = "reference"
    needs_model = ns.mode != "stackpilot" or ns.matcher == "judge" or ns.executor == "llm"
    if needs_model:
        try:
            client = _chat_client(ns)
            judge_client = client if ns.matcher == "judge" else None
            model = client.config.model
        except TransportError as exc:
            if ns.mode != "stackpilot" or ns.executor == "llm":
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_EXECUTOR
            print(f"warning: {exc}; falling back to normalized matching", file=sys.stderr)

    if ns.executor == "llm":
        executor_factory = lambda: LlmExecutor(client)  # noqa: E731
        executor = None
    elif ns.executor == "replay":
        if ns.script is None:
            print("error: --executor replay needs --script", file=sys.stderr)
            return EXIT_PARSE
        script_path = Path(ns.script)
        executor_factory = lambda: ReplayExecutor(load_script(script_path, program))  # noqa: E731
        executor = None
    else:
        executor = ReferenceExecutor()
        executor_factory = None
        model = "reference"

    report = run_suite(
        program,
        cases,
        executor=executor,
        executor_factory=executor_factory,
        mode=ns.mode,
        matcher=ns.matcher,
        judge_client=judge_client,
        limits=_limits(ns),
        workers=ns.workers,
        trace_dir=ns.trace_dir,
        client=client,
        model=model,
        suite=Path(ns.cases).stem,
    )
    print(report.summary_table())
    percent = float(report.accuracy) * 100.0
    print(f"accuracy {percent:.1f}% ({report.passed}/{len(report.results)})")
    if ns.report_out:
        Path(ns.report_out).write_text(
            json.dumps(report.to_record(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"report written to {ns.report_out}", file=sys.stderr)
    return EXIT_OK


def _cmd_debug(ns: argparse.Namespace) -> int:
    parse_bundle(ns.bundle)  # fail fast on bad bundles
    service = DebugService()
    server = make_server(service, ns.host, ns.port)
    host, port = server.server_address[:2]
    print(f"debug service listening on http://{host}:{port}", flush=True)
    print(
        f"create a session: POST /sessions {{\"bundle\": {json.dumps(ns.bundle)}, "
        f"\"args\": {ns.args}, \"executor\": \"{ns.executor}\"}}",
        flush=True,
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.command == "run":
            return _cmd_run(ns)
        if ns.command == "eval":
            return _cmd_eval(ns)
        return _cmd_debug(ns)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXECUTOR
    except StackPilotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
