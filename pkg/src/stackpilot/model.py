"""Program model: functions with labeled lines and a static call graph.

A program bundle is either a single source file or a ``bundle.json``
manifest listing source files plus the entry function. Functions are
extracted by language-specific header patterns, every body line gets a
dense ``L1..Ln`` label, and a syntactic over-approximation of the call
relation becomes the static call graph.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import DuplicateFunction, MissingEntry, ParseError

LANGUAGE_TAGS = ("minilang", "python", "java", "rust", "other")

_SUFFIX_TAGS = {".py": "minilang", ".java": "java", ".rs": "rust"}

_LABEL_RE = re.compile(r"^L[1-9][0-9]*$")
_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

_DEF_RE = re.compile(r"^def\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(([^)]*)\)\s*:\s*(?:#.*)?$")
_RUST_FN_RE = re.compile(r"^\s*(?:pub(?:\([^)]*\))?\s+)?fn\s+([A-Za-z_][A-Za-z0-9_]*)")
_JAVA_KEYWORDS = frozenset(
    {"if", "for", "while", "switch", "catch", "return", "new", "else", "do", "synchronized"}
)
_JAVA_METHOD_RE = re.compile(
    r"^\s*(?:(?:public|private|protected|static|final|abstract|synchronized|native|strictfp)\s+)*"
    r"[A-Za-z_][\w<>\[\],\s.]*?\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(([^)]*)\)\s*\{?\s*$"
)


def normalize_source(text: str) -> str:
    """Normalize line endings to LF and expand leading tabs to 4 spaces."""
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = []
    for line in text.split("\n"):
        stripped = line.lstrip(" \t")
        prefix = line[: len(line) - len(stripped)]
        lines.append(prefix.replace("\t", "    ") + stripped)
    return "\n".join(lines)


def _indent_of(line: str) -> int:
    return len(line) - len(line.lstrip(" "))


@dataclass(frozen=True)
class LabeledLine:
    """One body line: label L<k>, raw text, leading-space indent."""

    label: str
    text: str
    indent: int

    def __post_init__(self) -> None:
        if not _LABEL_RE.match(self.label):
            raise ParseError(f"bad line label {self.label!r}")
        if self.indent < 0:
            raise ParseError("negative indent")

    @property
    def index(self) -> int:
        return int(self.label[1:])


@dataclass(frozen=True)
class FunctionDef:
    """One parsed function: name, parameters, labeled body lines."""

    name: str
    params: tuple[str, ...]
    body: tuple[LabeledLine, ...]
    language_tag: str = "minilang"
    header: str = ""
    source_span: tuple[int, int] = field(default=(0, 0), compare=False)

    def __post_init__(self) -> None:
        if not _IDENT_RE.match(self.name):
            raise ParseError(f"bad function name {self.name!r}")
        if self.language_tag not in LANGUAGE_TAGS:
            raise ParseError(f"unknown language tag {self.language_tag!r}")
        if len(set(self.params)) != len(self.params):
            raise ParseError(f"{self.name}: duplicate parameter names")
        if not self.body:
            raise ParseError(f"{self.name}: empty body")
        indices = [line.index for line in self.body]
        if indices != list(range(1, len(self.body) + 1)):
            raise ParseError(f"{self.name}: line labels are not dense L1..L{len(self.body)}")

    def labels(self) -> tuple[str, ...]:
        return tuple(line.label for line in self.body)

    def has_label(self, label: str) -> bool:
        if not _LABEL_RE.match(label):
            return False
        return 1 <= int(label[1:]) <= len(self.body)

    def line(self, label: str) -> LabeledLine:
        return self.body[int(label[1:]) - 1]


@dataclass(frozen=True)
class CallGraph:
    """Static may-call relation: nodes are function names, self-edges allowed."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        known = set(self.nodes)
        for caller, callee in self.edges:
            if caller not in known or callee not in known:
                raise ParseError(f"call graph edge ({caller}, {callee}) outside node set")

    def callees_of(self, name: str) -> tuple[str, ...]:
        return tuple(dst for src, dst in self.edges if src == name)


@dataclass(frozen=True)
class Program:
    """A function set with a designated entry and its static call graph."""

    functions: tuple[FunctionDef, ...]
    entry: str
    call_graph: CallGraph

    def __post_init__(self) -> None:
        names = [f.name for f in self.functions]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise DuplicateFunction(f"duplicate function names: {sorted(dupes)}")
        if self.entry not in names:
            raise MissingEntry(f"entry function {self.entry!r} is not defined")
        for node in self.call_graph.nodes:
            if node not in names:
                raise ParseError(f"call graph node {node!r} is not a function")

    def function_named(self, name: str) -> FunctionDef | None:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    @property
    def entry_function(self) -> FunctionDef:
        fn = self.function_named(self.entry)
        assert fn is not None
        return fn


def annotate_lines(
    draft: Union[FunctionDef, Sequence[Union[str, LabeledLine]]],
) -> Union[FunctionDef, tuple[LabeledLine, ...]]:
    """Assign dense labels L1..Ln by body position; idempotent."""
    if isinstance(draft, FunctionDef):
        body = annotate_lines([line.text for line in draft.body])
        return FunctionDef(
            name=draft.name,
            params=draft.params,
            body=body,
            language_tag=draft.language_tag,
            header=draft.header,
            source_span=draft.source_span,
        )
    out = []
    for i, line in enumerate(draft, start=1):
        text = line.text if isinstance(line, LabeledLine) else line
        out.append(LabeledLine(label=f"L{i}", text=text, indent=_indent_of(text)))
    return tuple(out)


def _parse_def_params(raw: str, where: str) -> tuple[str, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    params = []
    for part in raw.split(","):
        name = part.strip()
        if not _IDENT_RE.match(name):
            raise ParseError(f"{where}: unsupported parameter {part.strip()!r}")
        params.append(name)
    return tuple(params)


def _strip_trailing_blanks(lines: list[str]) -> list[str]:
    # trailing blanks and column-0 comments are inter-function separators
    while lines and (not lines[-1].strip() or (lines[-1].startswith("#"))):
        lines.pop()
    return lines


def _extract_def_functions(source: str, tag: str) -> list[FunctionDef]:
    lines = source.split("\n")
    functions: list[FunctionDef] = []
    i = 0
    n = len(lines)
    while i < n:
        line = lines[i]
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            i += 1
            continue
        if _indent_of(line) != 0:
            raise ParseError(f"line {i + 1}: unexpected indentation outside a function")
        m = _DEF_RE.match(line)
        if not m:
            raise ParseError(f"line {i + 1}: only top-level function definitions are supported")
        name = m.group(1)
        params = _parse_def_params(m.group(2), f"function {name}")
        start = i + 1
        j = start
        body_lines: list[str] = []
        while j < n:
            candidate = lines[j]
            if candidate.strip() and _indent_of(candidate) == 0 and not candidate.startswith("#"):
                break
            body_lines.append(candidate)
            j += 1
        body_lines = _strip_trailing_blanks(body_lines)
        if not body_lines:
            raise ParseError(f"function {name}: empty body")
        functions.append(
            FunctionDef(
                name=name,
                params=params,
                body=annotate_lines(body_lines),
                language_tag=tag,
                header=line,
                source_span=(i + 1, start + len(body_lines)),
            )
        )
        i = j
    return functions


def _java_param_names(raw: str) -> tuple[str, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    names = []
    for part in raw.split(","):
        tokens = part.replace("...", " ").split()
        if not tokens:
            raise ParseError(f"unsupported parameter list {raw!r}")
        names.append(tokens[-1])
    return tuple(names)


def _rust_param_names(raw: str) -> tuple[str, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    names = []
    depth = 0
    part = []
    parts = []
    for ch in raw:
        if ch in "<([":
            depth += 1
        elif ch in ">)]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(part))
            part = []
        else:
            part.append(ch)
    parts.append("".join(part))
    for p in parts:
        p = p.strip()
        if not p:
            continue
        name = p.split(":", 1)[0].strip().lstrip("&").replace("mut ", "").strip()
        names.append(name or "_")
    return tuple(names)


def _extract_braced_functions(source: str, tag: str) -> list[FunctionDef]:
    lines = source.split("\n")
    functions: list[FunctionDef] = []
    i = 0
    n = len(lines)
    while i < n:
        line = lines[i]
        name = None
        params_raw = None
        if tag == "rust":
            m = _RUST_FN_RE.match(line)
            if m and "(" in line:
                name = m.group(1)
                params_raw = line[line.index("(") + 1 : line.rindex(")")] if ")" in line else ""
        else:
            m = _JAVA_METHOD_RE.match(line)
            if (
                m
                and m.group(1) not in _JAVA_KEYWORDS
                and "=" not in line.split("(")[0]
                and "new " not in line.split("(")[0]
                and not line.rstrip().endswith(";")
            ):
                name = m.group(1)
                params_raw = m.group(2)
        if name is None:
            i += 1
            continue
        # find the opening brace, then match braces to the end of the body
        header_lines = [line]
        j = i
        while "{" not in lines[j]:
            j += 1
            if j >= n:
                raise ParseError(f"function {name}: missing opening brace")
            header_lines.append(lines[j])
        depth = 0
        opened = False
        body_start = None
        body_lines: list[str] = []
        k = j
        while k < n:
            for ch in lines[k]:
                if ch == "{":
                    depth += 1
                    opened = True
                elif ch == "}":
                    depth -= 1
            if opened and body_start is None:
                body_start = k + 1
            if opened and depth == 0:
                break
            if body_start is not None and k >= body_start:
                body_lines.append(lines[k])
            k += 1
        if not opened or depth != 0:
            raise ParseError(f"function {name}: unbalanced braces")
        if not body_lines and k == j:
            # one-line body: take the text between the outer braces
            text = lines[k]
            inner = text[text.index("{") + 1 : text.rindex("}")].strip()
            body_lines = [inner] if inner else []
        body_lines = [l.rstrip() for l in _strip_trailing_blanks(body_lines)]
        if not body_lines:
            body_lines = [""]
        params = (
            _rust_param_names(params_raw or "") if tag == "rust" else _java_param_names(params_raw or "")
        )
        params = tuple(p for p in params if p not in ("self", "_"))
        functions.append(
            FunctionDef(
                name=name,
                params=params,
                body=annotate_lines(body_lines),
                language_tag=tag,
                header="\n".join(header_lines),
                source_span=(i + 1, k + 1),
            )
        )
        i = k + 1
    return functions


def extract_functions(source: str, language_tag: str = "minilang") -> list[FunctionDef]:
    """Extract every top-level function definition by header pattern."""
    if not source.strip():
        raise ParseError("empty source")
    source = normalize_source(source)
    if language_tag in ("minilang", "python"):
        functions = _extract_def_functions(source, language_tag)
    elif language_tag in ("java", "rust"):
        functions = _extract_braced_functions(source, language_tag)
    else:
        raise ParseError(f"cannot extract functions for language {language_tag!r}")
    if not functions:
        raise ParseError("no function header found")
    return functions


def build_call_graph(functions: Iterable[FunctionDef]) -> CallGraph:
    """Syntactic may-call edges: an identifier followed by '(' naming a known function."""
    functions = list(functions)
    names = [f.name for f in functions]
    if len(set(names)) != len(names):
        raise DuplicateFunction("function names must be unique")
    if not names:
        return CallGraph(nodes=(), edges=())
    pattern = re.compile(r"\b(" + "|".join(re.escape(n) for n in sorted(names)) + r")\s*\(")
    edges = set()
    for fn in functions:
        text = "\n".join(line.text for line in fn.body)
        for m in pattern.finditer(text):
            prefix = text[: m.start()].rstrip()
            if prefix.endswith("def") or prefix.endswith("fn"):
                continue
            edges.add((fn.name, m.group(1)))
    return CallGraph(nodes=tuple(sorted(names)), edges=tuple(sorted(edges)))


def _check_duplicates(functions: Sequence[FunctionDef]) -> None:
    names = [f.name for f in functions]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise DuplicateFunction(f"duplicate function names: {sorted(dupes)}")


def _infer_entry(functions: Sequence[FunctionDef]) -> str:
    _check_duplicates(functions)
    names = [f.name for f in functions]
    if "main" in names:
        return "main"
    if len(names) == 1:
        return names[0]
    raise MissingEntry("no entry declared and no function named 'main'")


def _assemble(functions: list[FunctionDef], entry: str) -> Program:
    _check_duplicates(functions)
    if entry not in [f.name for f in functions]:
        raise MissingEntry(f"entry function {entry!r} is not defined")
    return Program(functions=tuple(functions), entry=entry, call_graph=build_call_graph(functions))


def _parse_manifest(manifest_path: Path) -> Program:
    try:
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read manifest {manifest_path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("manifest must be a JSON object")
    unknown = set(raw) - {"entry", "language", "files"}
    if unknown:
        raise ParseError(f"manifest has unknown fields: {sorted(unknown)}")
    entry = raw.get("entry")
    language = raw.get("language", "minilang")
    files = raw.get("files")
    if not isinstance(entry, str) or not isinstance(files, list) or not files:
        raise ParseError("manifest requires string 'entry' and non-empty 'files'")
    if language not in LANGUAGE_TAGS:
        raise ParseError(f"manifest language {language!r} is not one of {LANGUAGE_TAGS}")
    functions: list[FunctionDef] = []
    for rel in files:
        path = manifest_path.parent / rel
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read source file {path}: {exc}") from exc
        functions.extend(extract_functions(text, language))
    return _assemble(functions, entry)


def parse_bundle(source: Union[str, Path]) -> Program:
    """Parse a program bundle: manifest dir/file, single source file, or raw text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        path = Path(source)
        if path.is_dir():
            manifest = path / "bundle.json"
            if not manifest.is_file():
                raise ParseError(f"{path} has no bundle.json")
            return _parse_manifest(manifest)
        if path.is_file():
            if path.name == "bundle.json":
                return _parse_manifest(path)
            tag = _SUFFIX_TAGS.get(path.suffix, "minilang")
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise ParseError(f"cannot read {path}: {exc}") from exc
            functions = extract_functions(text, tag)
            return _assemble(functions, _infer_entry(functions))
        if isinstance(source, Path):
            raise ParseError(f"no such bundle: {source}")
    # raw source text, minilang by default
    functions = extract_functions(str(source), "minilang")
    return _assemble(functions, _infer_entry(functions))


def write_bundle(program: Program, directory: Union[str, Path]) -> Path:
    """Write a program back out as a bundle; parse_bundle(write_bundle(p)) == p."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tag = program.functions[0].language_tag if program.functions else "minilang"
    ext = {"minilang": ".py", "python": ".py", "java": ".java", "rust": ".rs"}.get(tag, ".txt")
    source_name = f"program{ext}"
    chunks = []
    for fn in program.functions:
        body = "\n".join(line.text for line in fn.body)
        if fn.language_tag in ("java", "rust"):
            closing = " " * _indent_of(fn.header.split("\n")[0]) + "}"
            chunks.append(f"{fn.header}\n{body}\n{closing}")
        else:
            chunks.append(f"{fn.header}\n{body}")
    (directory / source_name).write_text("\n\n".join(chunks) + "\n", encoding="utf-8")
    manifest = {"entry": program.entry, "language": tag, "files": [source_name]}
    manifest_path = directory / "bundle.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path
