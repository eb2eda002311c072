"""Shared fixtures plus the acceptance-criteria summary table."""

from __future__ import annotations

import numpy as np
import pytest

_CRITERIA: list[tuple[int, str, bool, str]] = []


def record_criterion(num: int, description: str, passed: bool, detail: str = ""):
    _CRITERIA.append((num, description, passed, detail))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num, desc, ok, detail in sorted(_CRITERIA):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {num:2d} [{status}] {desc}"
        if detail:
            line += f"  ({detail})"
        tr.write_line(line)
