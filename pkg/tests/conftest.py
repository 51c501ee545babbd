import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from justcheck.harness import run_matrix  # noqa: E402

THREE_THREAD = os.environ.get("JUSTCHECK_THREE_THREAD") == "1"


@pytest.fixture(scope="session")
def two_thread_report():
    """The two-thread verdict matrix, computed once per session."""
    return run_matrix("two_thread", jobs=min(8, os.cpu_count() or 1))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
