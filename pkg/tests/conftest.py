"""Shared fixtures and the acceptance summary printed at the end of a run."""

from collections import OrderedDict
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance_of: dict[str, str] = {}
_acceptance: "OrderedDict[str, list[bool]]" = OrderedDict()


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def ten_path() -> Path:
    return FIXTURES / "ten.xml"


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark:
            name = mark.args[0]
            _acceptance_of[item.nodeid] = name
            _acceptance.setdefault(name, [])


def pytest_runtest_logreport(report):
    name = _acceptance_of.get(report.nodeid)
    if name is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        _acceptance[name].append(report.passed and report.when == "call")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, outcomes in _acceptance.items():
        if not outcomes:
            status = "NOT RUN"
        else:
            status = "PASS" if all(outcomes) else "FAIL"
        tr.write_line(f"{status}: {name}")
