"""Interactive debug service: step, continue, breakpoints, inspection.

A thin adapter over scheduler.step — there is no second execution engine.
Every response carries {step_counter, mode}; mutating calls are
single-flight per session (409 when one is already running), and
breakpoints pause before the matching line executes.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import ParseError, StackPilotError
from .executors.llm import ChatClient, ChatConfig, LlmExecutor
from .executors.reference import ReferenceExecutor
from .model import parse_bundle
from .scheduler import (
    GLOBAL,
    SESSION_FINISHED,
    SESSION_RUNNING,
    Limits,
    Session,
    create_session,
    step,
)
from .snapshots import Snapshot
from .values import Value, deep_copy, ensure_value

MODE_PAUSED = "paused"
MODE_RUNNING = "running-to-breakpoint"
MODE_FINISHED = "finished"


class ServiceError(StackPilotError):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


@dataclass
class DebugSession:
    id: str
    session: Session
    breakpoints: set[tuple[str, str]] = field(default_factory=set)
    mode: str = MODE_PAUSED
    lock: threading.Lock = field(default_factory=threading.Lock)
    busy: bool = False


def _make_executor(name: str):
    if name == "reference":
        return ReferenceExecutor()
    if name == "llm":
        return LlmExecutor(ChatClient(ChatConfig.from_env()))
    raise ServiceError(400, f"unknown executor {name!r} (use reference or llm)")


class DebugService:
    """Session registry plus the protocol operations the HTTP layer exposes."""

    def __init__(self) -> None:
        self.sessions: dict[str, DebugSession] = {}
        self._registry_lock = threading.Lock()

    # session lifecycle

    def create(self, bundle: str, args: list[Value], executor: str = "reference",
               limits: Limits | None = None) -> DebugSession:
        try:
            program = parse_bundle(bundle)
        except ParseError as exc:
            raise ServiceError(400, f"bad bundle: {exc}") from exc
        try:
            session = create_session(program, args, _make_executor(executor), limits)
        except StackPilotError as exc:
            raise ServiceError(400, str(exc)) from exc
        ds = DebugSession(id=uuid.uuid4().hex[:12], session=session)
        with self._registry_lock:
            self.sessions[ds.id] = ds
        return ds

    def get(self, session_id: str) -> DebugSession:
        ds = self.sessions.get(session_id)
        if ds is None:
            raise ServiceError(404, f"no session {session_id!r}")
        return ds

    def delete(self, session_id: str) -> None:
        self.get(session_id)
        with self._registry_lock:
            self.sessions.pop(session_id, None)

    # stepping

    def _begin_mutation(self, ds: DebugSession) -> None:
        with ds.lock:
            if ds.busy:
                raise ServiceError(409, "another step is already in flight")
            ds.busy = True

    def _end_mutation(self, ds: DebugSession) -> None:
        with ds.lock:
            ds.busy = False

    def step(self, session_id: str) -> dict:
        ds = self.get(session_id)
        self._begin_mutation(ds)
        try:
            event = None
            if ds.session.status == SESSION_RUNNING:
                with ds.lock:
                    event = step(ds.session)
            ds.mode = MODE_PAUSED if ds.session.status == SESSION_RUNNING else MODE_FINISHED
            state = self.state(session_id)
            if event is not None:
                state["event"] = event.to_record()
            return state
        finally:
            self._end_mutation(ds)

    def continue_(self, session_id: str) -> dict:
        ds = self.get(session_id)
        self._begin_mutation(ds)
        try:
            ds.mode = MODE_RUNNING
            stepped = False
            while ds.session.status == SESSION_RUNNING:
                if stepped and self._at_breakpoint(ds):
                    break
                with ds.lock:
                    step(ds.session)
                stepped = True
            ds.mode = MODE_PAUSED if ds.session.status == SESSION_RUNNING else MODE_FINISHED
            return self.state(session_id)
        finally:
            self._end_mutation(ds)

    def _at_breakpoint(self, ds: DebugSession) -> bool:
        if not ds.session.stack:
            return False
        top = ds.session.stack[-1]
        if isinstance(top, Snapshot) or top.finished:
            return False
        return (top.function.name, top.pointer) in ds.breakpoints

    # breakpoints

    def set_breakpoint(self, session_id: str, function: str, line: str) -> dict:
        ds = self.get(session_id)
        fn = ds.session.program.function_named(function)
        if fn is None:
            raise ServiceError(400, f"no function {function!r}")
        if not fn.has_label(line):
            raise ServiceError(400, f"{function} has no line {line!r}")
        ds.breakpoints.add((function, line))
        return self.state(session_id)

    def clear_breakpoint(self, session_id: str, function: str, line: str) -> dict:
        ds = self.get(session_id)
        ds.breakpoints.discard((function, line))
        return self.state(session_id)

    # read-only queries

    def state(self, session_id: str) -> dict:
        ds = self.get(session_id)
        session = ds.session
        mode = ds.mode if session.status == SESSION_RUNNING else MODE_FINISHED
        state: dict = {
            "id": ds.id,
            "step_counter": session.step_counter,
            "mode": mode,
            "status": session.status,
            "breakpoints": sorted([list(bp) for bp in ds.breakpoints]),
        }
        if session.status == SESSION_FINISHED:
            state["output"] = deep_copy(session.output)
        if session.error is not None:
            state["error"] = session.error
        return state

    def stack(self, session_id: str) -> dict:
        ds = self.get(session_id)
        with ds.lock:
            entries = []
            for entry in ds.session.stack:
                if isinstance(entry, Snapshot):
                    entries.append(
                        {
                            "function": entry.id.function_name,
                            "index": entry.id.appearance_index,
                            "pointer": entry.execution_pointer,
                            "live": False,
                        }
                    )
                else:
                    entries.append(
                        {
                            "function": entry.function.name,
                            "index": entry.appearance_index,
                            "pointer": entry.pointer,
                            "live": not entry.finished,
                        }
                    )
        state = self.state(session_id)
        state["stack"] = entries
        return state

    def heap(self, session_id: str, scope: str = GLOBAL) -> dict:
        ds = self.get(session_id)
        with ds.lock:
            heap = ds.session.heap
            if scope == GLOBAL:
                variables = {k: deep_copy(v) for k, v in heap.global_scope.items()}
            elif scope in heap.frames:
                variables = {k: deep_copy(v) for k, v in heap.frames[scope].items()}
            else:
                raise ServiceError(404, f"no scope {scope!r}")
        state = self.state(session_id)
        state["scope"] = scope
        state["variables"] = variables
        return state

    def trace(self, session_id: str, tail: int | None = None) -> dict:
        ds = self.get(session_id)
        with ds.lock:
            events = [e.to_record() for e in ds.session.trace]
        if tail is not None:
            events = events[-tail:]
        state = self.state(session_id)
        state["events"] = events
        return state

    def code(self, session_id: str) -> dict:
        ds = self.get(session_id)
        functions = []
        for fn in ds.session.program.functions:
            functions.append(
                {
                    "name": fn.name,
                    "params": list(fn.params),
                    "header": fn.header,
                    "lines": [
                        {"label": line.label, "text": line.text, "indent": line.indent}
                        for line in fn.body
                    ],
                }
            )
        state = self.state(session_id)
        state["entry"] = ds.session.program.entry
        state["functions"] = functions
        return state


class _Handler(BaseHTTPRequestHandler):
    service: DebugService  # set by make_server

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib signature
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            parsed = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, ValueError) as exc:
            raise ServiceError(400, f"request body is not valid JSON: {exc}") from exc
        if not isinstance(parsed, dict):
            raise ServiceError(400, "request body must be a JSON object")
        return parsed

    def _dispatch(self, method: str) -> None:
        try:
            payload = self._route(method)
            self._send(200, payload)
        except ServiceError as exc:
            self._send(exc.status, {"error": str(exc)})
        except StackPilotError as exc:
            self._send(400, {"error": f"{exc.code}: {exc}"})

    def _route(self, method: str) -> dict:
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        service = self.service
        if parts == ["sessions"] and method == "POST":
            body = self._body()
            bundle = body.get("bundle")
            if not isinstance(bundle, str):
                raise ServiceError(400, "field 'bundle' (path or source text) is required")
            args = body.get("args", [])
            if not isinstance(args, list):
                raise ServiceError(400, "field 'args' must be a list")
            executor = body.get("executor", "reference")
            ds = service.create(bundle, [ensure_value(a) for a in args], executor)
            return service.state(ds.id)
        if len(parts) >= 2 and parts[0] == "sessions":
            session_id = parts[1]
            rest = parts[2:]
            if not rest:
                if method == "DELETE":
                    state = service.state(session_id)
                    service.delete(session_id)
                    return state
                if method == "GET":
                    return service.state(session_id)
            elif rest == ["step"] and method == "POST":
                return service.step(session_id)
            elif rest == ["continue"] and method == "POST":
                return service.continue_(session_id)
            elif rest == ["breakpoints"] and method in ("PUT", "DELETE"):
                body = self._body()
                function = body.get("function")
                line = body.get("line")
                if not isinstance(function, str) or not isinstance(line, str):
                    raise ServiceError(400, "breakpoints need string 'function' and 'line'")
                if method == "PUT":
                    return service.set_breakpoint(session_id, function, line)
                return service.clear_breakpoint(session_id, function, line)
            elif rest == ["stack"] and method == "GET":
                return service.stack(session_id)
            elif rest == ["heap"] and method == "GET":
                query = parse_qs(url.query)
                scope = query.get("scope", [GLOBAL])[0]
                return service.heap(session_id, scope)
            elif rest == ["trace"] and method == "GET":
                query = parse_qs(url.query)
                tail_raw = query.get("tail", [None])[0]
                tail = None
                if tail_raw is not None:
                    try:
                        tail = max(0, int(tail_raw))
                    except ValueError:
                        raise ServiceError(400, "tail must be an integer") from None
                return service.trace(session_id, tail)
            elif rest == ["code"] and method == "GET":
                return service.code(session_id)
        raise ServiceError(404, f"no route {method} {url.path}")

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_PUT(self) -> None:
        self._dispatch("PUT")

    def do_DELETE(self) -> None:
        self._dispatch("DELETE")

    def do_OPTIONS(self) -> None:
        self._send(204, {})


def make_server(
    service: DebugService, host: str = "127.0.0.1", port: int = 8765
) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)
