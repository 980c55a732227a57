import json
from pathlib import Path

import pytest

ORACLES = json.loads((Path(__file__).parent / "oracles" / "derived.json").read_text())


@pytest.fixture(scope="session")
def oracle():
    return ORACLES


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
