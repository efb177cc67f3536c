import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

LONGRUN = os.environ.get("BAUT_LONGRUN") == "1"

ACCEPTANCE_LINES: list[str] = []


def pytest_collection_modifyitems(config, items):
    if LONGRUN:
        return
    skip = pytest.mark.skip(reason="long-run; set BAUT_LONGRUN=1")
    for item in items:
        if "longrun" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
