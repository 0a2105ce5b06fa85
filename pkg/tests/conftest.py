"""Shared fixtures, plus the acceptance summary printed at the end of a run."""
from __future__ import annotations

import numpy as np
import pytest

# criterion id -> (description, outcome); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, list] = {}


def record(criterion: int, title: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[criterion] = [title, passed, detail]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[k]
        line = f"AC{k:>2} {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        tr.write_line(line)
