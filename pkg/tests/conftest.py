from pathlib import Path

import numpy as np
import pytest

from mtdlab.sut import ListDomain, NumericDomain, ParameterSpec, SutSpec

DATA = Path(__file__).parent / "data"

_acceptance_outcomes = []


def numeric_sut(n, default=20, secure=None, name="numeric"):
    secure = default if secure is None else secure
    return SutSpec(name, tuple(ParameterSpec(f"p{i}", NumericDomain(default), secure) for i in range(n)))


@pytest.fixture
def mcafee_file():
    return DATA / "mcafee_sut.json"


@pytest.fixture
def sut14():
    return numeric_sut(14)


@pytest.fixture
def mixed_sut():
    return SutSpec("mixed", (
        ParameterSpec("a", NumericDomain(20), 20),
        ParameterSpec("b", NumericDomain(5), 7),
        ParameterSpec("c", ListDomain((1, 3, 5), allow_none=True), None),
        ParameterSpec("d", ListDomain((0, 2)), 2),
    ))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance_outcomes.append((marker.kwargs.get("criterion", item.name), report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, outcome in _acceptance_outcomes:
        tag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{tag}] {criterion}")
