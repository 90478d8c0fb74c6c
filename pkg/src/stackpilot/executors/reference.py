"""Deterministic line-stepping interpreter for the minilang subset.

Minilang is a small python-like language: assignment (plain, indexed,
augmented), arithmetic (+ - * / // %), comparisons, boolean operators,
if/elif/else, while, return, list/map literals and indexing, global
declarations, and function calls. A call to a user function must be an
entire statement, the whole right-hand side of an assignment, or the
whole return expression; builtins fold into expressions inline.

The executor is stateless: each action is derived purely from the
function body, the execution pointer, and the visible variables, so a
suspended agent can resume from a snapshot with no interpreter state.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

from ..agents import DONE
from ..model import FunctionDef
from ..values import Value, deep_copy
from .actions import (
    Action,
    Call,
    ExecContext,
    ExecutorDescriptor,
    Fault,
    HeapDelta,
    Return,
    Step,
    SCOPE_GLOBAL,
    SCOPE_LOCAL,
)
from .builtins import BUILTIN_NAMES, call_builtin

RESERVED_RESULT_SLOT = "__ret"

_ELSE_RE = re.compile(r"^else\s*:\s*(?:#.*)?$")


class _Unsupported(Exception):
    pass


class _EvalFault(Exception):
    pass


class _UserCall(Exception):
    def __init__(self, node: ast.Call):
        super().__init__("user call")
        self.node = node


@dataclass
class _LineInfo:
    kind: str  # blank | pass | global | plain | return | if | elif | else | while
    stmt: ast.stmt | None = None
    test: ast.expr | None = None
    error: str | None = None
    next: str | None = None
    true_target: str | None = None
    false_target: str | None = None


@dataclass
class _Layout:
    info: dict[str, _LineInfo]
    global_names: frozenset[str]


def _parse_single(source: str) -> ast.stmt:
    module = ast.parse(source)
    if len(module.body) != 1:
        raise _Unsupported("one statement per line")
    return module.body[0]


def _classify(text: str) -> _LineInfo:
    s = text.strip()
    if not s or s.startswith("#"):
        return _LineInfo(kind="blank")
    if _ELSE_RE.match(s):
        return _LineInfo(kind="else")
    if s == "elif" or s.startswith("elif ") or s.startswith("elif:"):
        try:
            stmt = _parse_single("if" + s[4:] + "\n    pass")
        except (SyntaxError, ValueError, _Unsupported):
            return _LineInfo(kind="elif", error=f"cannot parse condition: {s!r}")
        if not isinstance(stmt, ast.If):
            return _LineInfo(kind="elif", error=f"cannot parse condition: {s!r}")
        return _LineInfo(kind="elif", test=stmt.test)
    try:
        stmt = _parse_single(s)
    except (SyntaxError, ValueError):
        stmt = None
    except _Unsupported as exc:
        return _LineInfo(kind="plain", error=str(exc))
    if stmt is None:
        # block headers do not parse standalone; retry with a dummy body
        try:
            stmt = _parse_single(s + "\n    pass")
        except (SyntaxError, ValueError, _Unsupported):
            return _LineInfo(kind="plain", error=f"unsupported syntax: {s!r}")
        if isinstance(stmt, ast.If):
            return _LineInfo(kind="if", test=stmt.test)
        if isinstance(stmt, ast.While):
            return _LineInfo(kind="while", test=stmt.test)
        return _LineInfo(kind="plain", error=f"unsupported syntax: {s!r}")
    if isinstance(stmt, ast.Pass):
        return _LineInfo(kind="pass")
    if isinstance(stmt, ast.Global):
        return _LineInfo(kind="global", stmt=stmt)
    if isinstance(stmt, ast.Return):
        return _LineInfo(kind="return", stmt=stmt)
    if isinstance(stmt, (ast.Assign, ast.AugAssign, ast.Expr)):
        return _LineInfo(kind="plain", stmt=stmt)
    if isinstance(stmt, (ast.If, ast.While)):
        return _LineInfo(kind="plain", error="inline block bodies are not supported")
    if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
        return _LineInfo(kind="plain", error="nested function definitions are not executable here")
    return _LineInfo(kind="plain", error=f"unsupported statement: {type(stmt).__name__}")


@dataclass
class _Node:
    label: str
    info: _LineInfo
    body: list["_Node"] = field(default_factory=list)
    branches: list[tuple[str, list["_Node"]]] = field(default_factory=list)  # if-chains
    else_label: str | None = None
    else_body: list["_Node"] | None = None


def _build_layout(fn: FunctionDef) -> _Layout:
    info: dict[str, _LineInfo] = {}
    entries: list[tuple[str, int, _LineInfo]] = []
    for line in fn.body:
        li = _classify(line.text)
        info[line.label] = li
        if li.kind != "blank":
            entries.append((line.label, line.indent, li))

    global_names: set[str] = set()
    for _, _, li in entries:
        if li.kind == "global" and li.stmt is not None:
            global_names.update(li.stmt.names)  # type: ignore[attr-defined]

    pos = 0

    def parse_block(indent: int) -> list[_Node]:
        nonlocal pos
        nodes: list[_Node] = []
        while pos < len(entries):
            label, line_indent, li = entries[pos]
            if line_indent < indent:
                break
            if line_indent > indent:
                li.error = li.error or "unexpected indent"
                nodes.append(_Node(label=label, info=li))
                pos += 1
                continue
            if li.kind in ("elif", "else"):
                # legal only while chained onto an if; the chain loop consumes those
                li.error = li.error or f"{li.kind} without a matching if"
                nodes.append(_Node(label=label, info=li))
                pos += 1
                continue
            node = _Node(label=label, info=li)
            pos += 1
            if li.kind in ("if", "while"):
                child_indent = entries[pos][1] if pos < len(entries) else indent
                if pos >= len(entries) or child_indent <= indent:
                    li.error = li.error or "expected an indented block"
                else:
                    node.body = parse_block(child_indent)
                    if not node.body:
                        li.error = li.error or "expected an indented block"
                if li.kind == "if":
                    node.branches = [(label, node.body)]
                    node.body = []
                    while pos < len(entries) and entries[pos][1] == indent and entries[pos][2].kind in ("elif", "else"):
                        chain_label, _, chain_info = entries[pos]
                        pos += 1
                        child_indent = entries[pos][1] if pos < len(entries) else indent
                        if pos >= len(entries) or child_indent <= indent:
                            chain_info.error = chain_info.error or "expected an indented block"
                            chain_body: list[_Node] = []
                        else:
                            chain_body = parse_block(child_indent)
                            if not chain_body:
                                chain_info.error = chain_info.error or "expected an indented block"
                        if chain_info.kind == "elif":
                            node.branches.append((chain_label, chain_body))
                        else:
                            node.else_label = chain_label
                            node.else_body = chain_body
                            break
            nodes.append(node)
        return nodes

    tree = parse_block(entries[0][1] if entries else 0)
    while pos < len(entries):
        # dedents below the first line's indent never nest anywhere valid
        _, _, li = entries[pos]
        li.error = li.error or "inconsistent indentation"
        pos += 1

    def entry_label(nodes: list[_Node], cont: str) -> str:
        return nodes[0].label if nodes else cont

    def resolve(nodes: list[_Node], exit_cont: str) -> None:
        for k, node in enumerate(nodes):
            cont = entry_label(nodes[k + 1 : k + 2], exit_cont)
            li = node.info
            if li.kind == "while":
                li.true_target = entry_label(node.body, node.label)
                li.false_target = cont
                resolve(node.body, node.label)
            elif li.kind == "if":
                for b, (branch_label, branch_body) in enumerate(node.branches):
                    branch_info = info[branch_label]
                    branch_info.true_target = entry_label(branch_body, cont)
                    if b + 1 < len(node.branches):
                        branch_info.false_target = node.branches[b + 1][0]
                    elif node.else_label is not None:
                        branch_info.false_target = node.else_label
                    else:
                        branch_info.false_target = cont
                    resolve(branch_body, cont)
                if node.else_label is not None:
                    info[node.else_label].next = entry_label(node.else_body or [], cont)
                    resolve(node.else_body or [], cont)
            else:
                li.next = cont

    resolve(tree, DONE)

    # successors for non-structural lines: chain to the following line
    labels = [line.label for line in fn.body]
    for idx, label in enumerate(labels):
        li = info[label]
        if li.kind == "blank" and li.next is None:
            li.next = labels[idx + 1] if idx + 1 < len(labels) else DONE
        if li.next is None and li.kind in ("pass", "global", "plain") and li.error is None:
            # structural line the tree walk never visited (broken nesting)
            li.next = labels[idx + 1] if idx + 1 < len(labels) else DONE
    for li in info.values():
        if li.kind in ("if", "elif", "while") and li.error is None:
            if li.true_target is None or li.false_target is None:
                li.error = "inconsistent indentation"
        if li.kind == "else" and li.error is None and li.next is None:
            li.error = "inconsistent indentation"
    return _Layout(info=info, global_names=frozenset(global_names))


@lru_cache(maxsize=256)
def _layout_for(fn: FunctionDef) -> _Layout:
    return _build_layout(fn)


_BIN_OPS = {
    ast.Add: "+",
    ast.Sub: "-",
    ast.Mult: "*",
    ast.Div: "/",
    ast.FloorDiv: "//",
    ast.Mod: "%",
}

_CMP_OPS = {
    ast.Eq: "==",
    ast.NotEq: "!=",
    ast.Lt: "<",
    ast.LtE: "<=",
    ast.Gt: ">",
    ast.GtE: ">=",
}


class _Env:
    def __init__(self, locals_map: Mapping[str, Value], globals_map: Mapping[str, Value], global_names: frozenset[str]):
        self.locals = locals_map
        self.globals = globals_map
        self.global_names = global_names

    def lookup(self, name: str) -> Value:
        if name in self.global_names:
            if name in self.globals:
                return self.globals[name]
            raise _EvalFault(f"global name '{name}' is not defined")
        if name in self.locals:
            return self.locals[name]
        if name in self.globals:
            return self.globals[name]
        raise _EvalFault(f"name '{name}' is not defined")

    def scope_of(self, name: str) -> str:
        return SCOPE_GLOBAL if name in self.global_names else SCOPE_LOCAL


def _check_number(value: Value, what: str) -> Value:
    if isinstance(value, float):
        import math

        if not math.isfinite(value):
            raise _EvalFault(f"{what} overflowed to a non-finite float")
    return value


def _binop(op: ast.operator, a: Value, b: Value) -> Value:
    symbol = _BIN_OPS.get(type(op))
    if symbol is None:
        raise _Unsupported(f"unsupported operator {type(op).__name__}")
    try:
        if symbol == "+":
            result = a + b  # type: ignore[operator]
        elif symbol == "-":
            result = a - b  # type: ignore[operator]
        elif symbol == "*":
            result = a * b  # type: ignore[operator]
        elif symbol == "/":
            result = a / b  # type: ignore[operator]
        elif symbol == "//":
            result = a // b  # type: ignore[operator]
        else:
            result = a % b  # type: ignore[operator]
    except ZeroDivisionError:
        raise _EvalFault("division by zero") from None
    except TypeError as exc:
        raise _EvalFault(f"bad operands for {symbol}: {exc}") from None
    return _check_number(result, f"'{symbol}'")


def _compare(op: ast.cmpop, a: Value, b: Value) -> bool:
    symbol = _CMP_OPS.get(type(op))
    if symbol is None:
        raise _Unsupported(f"unsupported comparison {type(op).__name__}")
    try:
        if symbol == "==":
            return a == b
        if symbol == "!=":
            return a != b
        if symbol == "<":
            return a < b  # type: ignore[operator]
        if symbol == "<=":
            return a <= b  # type: ignore[operator]
        if symbol == ">":
            return a > b  # type: ignore[operator]
        return a >= b  # type: ignore[operator]
    except TypeError as exc:
        raise _EvalFault(f"bad comparison {symbol}: {exc}") from None


def _index(container: Value, key: Value) -> Value:
    if isinstance(container, list) or isinstance(container, str):
        if isinstance(key, bool) or not isinstance(key, int):
            raise _EvalFault("list index must be an integer")
        try:
            return container[key]
        except IndexError:
            raise _EvalFault("index out of range") from None
    if isinstance(container, dict):
        if not isinstance(key, str):
            raise _EvalFault("map key must be a string")
        if key not in container:
            raise _EvalFault(f"key not found: {key!r}")
        return container[key]
    raise _EvalFault(f"{type(container).__name__} is not indexable")


def _eval(node: ast.expr, env: _Env) -> Value:
    if isinstance(node, ast.Constant):
        v = node.value
        if v is None or isinstance(v, (bool, int, str)):
            return v
        if isinstance(v, float):
            return _check_number(v, "literal")
        raise _Unsupported(f"unsupported literal {v!r}")
    if isinstance(node, ast.Name):
        return env.lookup(node.id)
    if isinstance(node, ast.BinOp):
        return _binop(node.op, _eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.Not):
            return not bool(_eval(node.operand, env))
        operand = _eval(node.operand, env)
        if isinstance(operand, bool) or not isinstance(operand, (int, float)):
            raise _EvalFault("unary +/- needs a number")
        return -operand if isinstance(node.op, ast.USub) else +operand
    if isinstance(node, ast.BoolOp):
        result: Value = None
        for operand in node.values:
            result = _eval(operand, env)
            truthy = bool(result)
            if isinstance(node.op, ast.And) and not truthy:
                return result
            if isinstance(node.op, ast.Or) and truthy:
                return result
        return result
    if isinstance(node, ast.Compare):
        left = _eval(node.left, env)
        for op, comparator in zip(node.ops, node.comparators):
            right = _eval(comparator, env)
            if not _compare(op, left, right):
                return False
            left = right
        return True
    if isinstance(node, ast.List):
        return [_eval(e, env) for e in node.elts]
    if isinstance(node, ast.Dict):
        out: dict[str, Value] = {}
        for key_node, value_node in zip(node.keys, node.values):
            if key_node is None:
                raise _Unsupported("map unpacking is not supported")
            key = _eval(key_node, env)
            if not isinstance(key, str):
                raise _EvalFault("map keys must be strings")
            out[key] = _eval(value_node, env)
        return out
    if isinstance(node, ast.Subscript):
        return _index(_eval(node.value, env), _eval(node.slice, env))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name):
            raise _Unsupported("only plain-name calls are supported")
        if node.keywords:
            raise _Unsupported("keyword arguments are not supported")
        name = node.func.id
        if name == "print":
            raise _Unsupported("print is only allowed as a standalone statement")
        if name in BUILTIN_NAMES:
            args = [_eval(a, env) for a in node.args]
            try:
                value, _ = call_builtin(name, args)
            except ValueError as exc:
                raise _EvalFault(str(exc)) from None
            return value
        raise _UserCall(node)
    raise _Unsupported(f"unsupported expression {type(node).__name__}")


def _eval_args(nodes: list[ast.expr], env: _Env) -> tuple[Value, ...]:
    args = []
    for node in nodes:
        try:
            args.append(_eval(node, env))
        except _UserCall:
            raise _Unsupported("nested calls are not supported; bind intermediate results first") from None
    return tuple(args)


def _assign_path(target: ast.Subscript, value: Value, env: _Env) -> tuple[str, Value]:
    """Rebuild the root container with the indexed element replaced."""
    chain: list[Value] = []
    node: ast.expr = target
    while isinstance(node, ast.Subscript):
        chain.append(_eval(node.slice, env))
        node = node.value
    if not isinstance(node, ast.Name):
        raise _Unsupported("assignment target must be a name or an indexed name")
    chain.reverse()
    root = deep_copy(env.lookup(node.id))
    container: Value = root
    for key in chain[:-1]:
        container = _index(container, key)
    leaf_key = chain[-1]
    if isinstance(container, list):
        if isinstance(leaf_key, bool) or not isinstance(leaf_key, int):
            raise _EvalFault("list index must be an integer")
        if not -len(container) <= leaf_key < len(container):
            raise _EvalFault("index out of range")
        container[leaf_key] = value
    elif isinstance(container, dict):
        if not isinstance(leaf_key, str):
            raise _EvalFault("map key must be a string")
        container[leaf_key] = value
    else:
        raise _EvalFault(f"{type(container).__name__} is not indexable")
    return node.id, root


def _user_call_target(node: ast.expr) -> ast.Call | None:
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id not in BUILTIN_NAMES
    ):
        return node
    return None


class ReferenceExecutor:
    """Oracle-grade deterministic executor for minilang functions."""

    descriptor = ExecutorDescriptor(name="reference", deterministic=True)

    def next_step(self, ctx: ExecContext) -> Action:
        if ctx.function.language_tag != "minilang":
            return Fault(f"reference executor cannot run language {ctx.function.language_tag!r}")
        if ctx.pointer == DONE or not ctx.function.has_label(ctx.pointer):
            return Fault(f"pointer {ctx.pointer!r} is not a line of {ctx.function.name}")
        layout = _layout_for(ctx.function)
        li = layout.info[ctx.pointer]
        if li.error:
            return Fault(f"{ctx.pointer}: {li.error}")
        env = _Env(ctx.locals, ctx.visible_globals, layout.global_names)
        try:
            return self._dispatch(ctx, li, env)
        except _UserCall:
            return Fault(
                f"{ctx.pointer}: calls to user functions must be a whole statement, "
                "assignment right-hand side, or return expression"
            )
        except (_EvalFault, _Unsupported) as exc:
            return Fault(f"{ctx.pointer}: {exc}")

    def _dispatch(self, ctx: ExecContext, li: _LineInfo, env: _Env) -> Action:
        assert li.next is not None or li.kind in ("if", "elif", "else", "while", "return")
        if li.kind in ("blank", "pass", "global"):
            return Step(next_pointer=li.next or DONE)
        if li.kind in ("if", "elif", "while"):
            assert li.test is not None and li.true_target and li.false_target
            try:
                truthy = bool(_eval(li.test, env))
            except _UserCall:
                raise _Unsupported("calls to user functions are not allowed in conditions") from None
            return Step(next_pointer=li.true_target if truthy else li.false_target)
        if li.kind == "else":
            return Step(next_pointer=li.next or DONE)
        if li.kind == "return":
            return self._do_return(ctx, li, env)
        return self._do_plain(ctx, li, env)

    def _do_return(self, ctx: ExecContext, li: _LineInfo, env: _Env) -> Action:
        assert isinstance(li.stmt, ast.Return)
        if li.stmt.value is None:
            return Return(value=None)
        call_node = _user_call_target(li.stmt.value)
        if call_node is not None:
            if RESERVED_RESULT_SLOT in ctx.locals:
                return Return(value=deep_copy(ctx.locals[RESERVED_RESULT_SLOT]))
            return Call(
                callee=call_node.func.id,  # type: ignore[union-attr]
                args=_eval_args(call_node.args, env),
                result_binding=RESERVED_RESULT_SLOT,
                resume_pointer=ctx.pointer,
            )
        return Return(value=_eval(li.stmt.value, env))

    def _do_plain(self, ctx: ExecContext, li: _LineInfo, env: _Env) -> Action:
        stmt = li.stmt
        next_pointer = li.next or DONE
        if isinstance(stmt, ast.Assign):
            if len(stmt.targets) != 1:
                raise _Unsupported("chained assignment is not supported")
            target = stmt.targets[0]
            call_node = _user_call_target(stmt.value)
            if call_node is not None:
                if not isinstance(target, ast.Name):
                    raise _Unsupported("a call result can only be bound to a plain name")
                if target.id == RESERVED_RESULT_SLOT:
                    raise _Unsupported(f"{RESERVED_RESULT_SLOT} is a reserved name")
                return Call(
                    callee=call_node.func.id,  # type: ignore[union-attr]
                    args=_eval_args(call_node.args, env),
                    result_binding=target.id,
                    resume_pointer=next_pointer,
                )
            value = _eval(stmt.value, env)
            if isinstance(target, ast.Name):
                if target.id == RESERVED_RESULT_SLOT:
                    raise _Unsupported(f"{RESERVED_RESULT_SLOT} is a reserved name")
                delta = HeapDelta(scope_kind=env.scope_of(target.id), name=target.id, value=value)
            elif isinstance(target, ast.Subscript):
                name, new_root = _assign_path(target, value, env)
                delta = HeapDelta(scope_kind=env.scope_of(name), name=name, value=new_root)
            else:
                raise _Unsupported("assignment target must be a name or an indexed name")
            return Step(next_pointer=next_pointer, deltas=(delta,))
        if isinstance(stmt, ast.AugAssign):
            if not isinstance(stmt.target, ast.Name):
                raise _Unsupported("augmented assignment target must be a plain name")
            name = stmt.target.id
            if name == RESERVED_RESULT_SLOT:
                raise _Unsupported(f"{RESERVED_RESULT_SLOT} is a reserved name")
            value = _binop(stmt.op, env.lookup(name), _eval(stmt.value, env))
            delta = HeapDelta(scope_kind=env.scope_of(name), name=name, value=value)
            return Step(next_pointer=next_pointer, deltas=(delta,))
        if isinstance(stmt, ast.Expr):
            inner = stmt.value
            if (
                isinstance(inner, ast.Call)
                and isinstance(inner.func, ast.Name)
                and inner.func.id == "print"
            ):
                if inner.keywords:
                    raise _Unsupported("keyword arguments are not supported")
                args = _eval_args(inner.args, env)
                _, log = call_builtin("print", list(args))
                return Step(next_pointer=next_pointer, log=log)
            call_node = _user_call_target(inner)
            if call_node is not None:
                return Call(
                    callee=call_node.func.id,  # type: ignore[union-attr]
                    args=_eval_args(call_node.args, env),
                    result_binding=None,
                    resume_pointer=next_pointer,
                )
            _eval(inner, env)
            return Step(next_pointer=next_pointer)
        raise _Unsupported(f"unsupported statement: {type(stmt).__name__}")
