from __future__ import annotations

import pytest

_acceptance_lines: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion and assert on it."""

    def _report(criterion: int, title: str, ok: bool, details: list[str]) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion:>2}: {title}"
        block = "\n".join([line] + [f"        {d}" for d in details])
        _acceptance_lines.append(block)
        print(block)
        assert ok, block

    return _report


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for block in sorted(_acceptance_lines, key=lambda b: int(b.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(block)
