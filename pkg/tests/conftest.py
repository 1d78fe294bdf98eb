import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; repeated in the terminal summary."""
    def report(number, title, ok, detail=""):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"criterion {number}: {status}  {title}" + (f"  [{detail}]" if detail else "")
        print(line)
        _LINES.append(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
