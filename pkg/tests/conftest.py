from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from specreq.docmodel import Document, Page


def data_path(name: str) -> Path:
    return Path(str(resources.files("specreq").joinpath(f"data/{name}")))


DEMO_DIR = data_path("demo")
DEMO_CORPUS = DEMO_DIR / "corpus.jsonl"
DEMO_CONFIG = DEMO_DIR / "demo.cfg"
DEMO_DOCUMENTS = sorted((DEMO_DIR / "documents").glob("*.json"))


def make_doc(pages: list[list[str]], figures=frozenset(), doc_id: str = "doc") -> Document:
    return Document(
        doc_id=doc_id,
        pages=tuple(Page(i, tuple(lines), i in figures) for i, lines in enumerate(pages)),
    )


@pytest.fixture(scope="session")
def demo_samples():
    from specreq.annotations import load_jsonl

    return load_jsonl(DEMO_CORPUS)


# criterion number -> list of (check, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        details = "; ".join(f"{name}: {detail}" for name, _, detail in checks)
        terminalreporter.write_line(f"criterion {number:2d} {status}  {details}")
