"""Acceptance criteria at full sample budgets.

Each test prints one ``PASS``/``FAIL`` line (visible with ``pytest -s`` and
in the verbose log) and asserts the criterion.
"""

from __future__ import annotations

import pytest

from ggbm.checks import CRITERIA, run_criterion


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, capsys):
    res = run_criterion(k, seed=0)
    with capsys.disabled():
        print(f"\n{res.line()} ({res.seconds:.1f}s)")
    assert res.passed, res.line()
