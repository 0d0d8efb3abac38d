"""The seventeen acceptance criteria at their stated tolerances, one test each.

Each test prints a single PASS/FAIL line with measured and required values.
Criteria 6, 10 and 13 are expected to fail; the reasons are recorded in the
decisions ledger kept alongside the repository.
"""

import pytest

from crossing_histories.acceptance import CRITERIA, run_criterion

SLOW = {6, 7, 9, 10}


@pytest.mark.parametrize(
    "cid",
    [pytest.param(c[0], marks=pytest.mark.slow) if c[0] in SLOW else c[0] for c in CRITERIA],
    ids=[f"{c[0]:02d}-{c[1].replace(' ', '-')}" for c in CRITERIA],
)
def test_criterion(cid, capsys):
    result = run_criterion(cid)
    with capsys.disabled():
        print("\n" + result.line)
    assert result.passed, result.line
    assert result.runtime <= result.budget, f"runtime {result.runtime:.1f}s exceeds {result.budget}s"


def test_sabotaged_hbar_is_caught(capsys):
    result = run_criterion(1, perturb_hbar=1e-3)
    with capsys.disabled():
        print("\n[sabotage] " + result.line)
    assert not result.passed
