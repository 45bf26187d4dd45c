import os

import pytest


def pytest_addoption(parser):
    parser.addoption("--run-long", action="store_true", default=False,
                     help="run the t=1000 experiments (minutes each)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-long") or os.environ.get("PDLSS_RUN_LONG") == "1":
        return
    skip = pytest.mark.skip(reason="long run; use --run-long or PDLSS_RUN_LONG=1")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
