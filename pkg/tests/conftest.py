import os
import time

import pytest

from jnqkit.verify import get_suite, run_suite

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def default_run():
    """One full default-suite run (single worker) with its wall time."""
    os.environ.pop("JNQ_GOLDEN_DIR", None)
    t0 = time.perf_counter()
    reports = run_suite(get_suite("default"), workers=1)
    return reports, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {line}")
