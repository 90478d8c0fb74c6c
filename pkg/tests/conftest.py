from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
REPO_DIR = TESTS_DIR.parent
CORPUS_DIR = TESTS_DIR / "corpus"
FIXTURES_DIR = REPO_DIR / "fixtures"
GOLDEN_DIR = TESTS_DIR / "golden"

sys.path.insert(0, str(TESTS_DIR))


def load_corpus() -> list[tuple[str, Path, list[list]]]:
    """Every corpus program with its committed argument sets."""
    out = []
    for path in sorted(CORPUS_DIR.glob("*.py")):
        first_line = path.read_text(encoding="utf-8").split("\n", 1)[0]
        assert first_line.startswith("# args:"), f"{path} lacks an args header"
        arg_sets = json.loads(first_line[len("# args:") :])
        out.append((path.stem, path, arg_sets))
    return out


def corpus_cases() -> list[tuple[str, Path, list]]:
    return [
        (f"{name}[{json.dumps(args)}]", path, args)
        for name, path, sets in load_corpus()
        for args in sets
    ]


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def union_find_program():
    import stackpilot as sp

    return sp.parse_bundle(FIXTURES_DIR / "union_find")


@pytest.fixture(scope="session")
def factorial_program():
    import stackpilot as sp

    return sp.parse_bundle(FIXTURES_DIR / "factorial.py")
