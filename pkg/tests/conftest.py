from __future__ import annotations

import sys
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
CORPUS_DIR = DATA / "corpus"

sys.path.insert(0, str(Path(__file__).parent))


def read_exact(path: Path) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def corpus_paths() -> list[Path]:
    return sorted(CORPUS_DIR.glob("*.i"))


@pytest.fixture(scope="session")
def corpus() -> dict[str, str]:
    return {p.name: read_exact(p) for p in corpus_paths()}


@pytest.fixture(scope="session")
def registry():
    from hitcheck import load_registry

    return load_registry(DATA / "registry.json")


@pytest.fixture(scope="session")
def registry_path() -> Path:
    return DATA / "registry.json"


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
