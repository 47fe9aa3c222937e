"""Collects acceptance-gate outcomes and prints one line per criterion at the end of the run."""
from collections import OrderedDict

import pytest

GATE: "OrderedDict[int, list[tuple[str, bool, str]]]" = OrderedDict()


def record(criterion: int, check: str, ok: bool, detail: str) -> bool:
    """Store one sub-check of a criterion and echo it (visible with ``-s``)."""
    GATE.setdefault(criterion, []).append((check, bool(ok), detail))
    print(f"criterion {criterion} [{check}]: {'PASS' if ok else 'FAIL'} ({detail})")
    return bool(ok)


@pytest.fixture(scope="session")
def gate():
    return record


def pytest_terminal_summary(terminalreporter):
    if not GATE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(GATE):
        checks = GATE[crit]
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'}, {info}" for name, good, info in checks)
        terminalreporter.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
