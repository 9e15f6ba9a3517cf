"""Shared pytest wiring.

Tests marked ``@pytest.mark.acceptance("<criterion>")`` get one summary line
each (pass or fail) in a dedicated terminal section so the gate status is
readable at a glance from the run log.
"""

from __future__ import annotations

import pytest

from evoseg import Genotype

_RESULTS = []


@pytest.fixture
def reference_genotype():
    """The worked-example architecture used across complexity tests."""
    return Genotype(
        filter_base=96,
        kernel_size=3,
        num_stages=3,
        dropout_rate=0.3,
        attention="self_attention",
        fusion="weighted_sum",
        activation="sigmoid",
        residual_scale=0.4,
    )


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): names a release-gate criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    _RESULTS.append((marker.args[0], report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in _RESULTS:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}")
