"""Acceptance criteria 1-12, one test each.

Every test prints a single ``criterion NN PASS|FAIL`` line (shown even under
output capture) followed by the individual checks that failed, if any.
"""

import pytest

from areabound.suite import CRITERIA, Instances


@pytest.fixture(scope="module")
def instances():
    return Instances()


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, instances, capsys):
    result = CRITERIA[number](instances)
    with capsys.disabled():
        print("\n" + result.line())
        for check in result.checks:
            if not check.passed:
                print(f"    {check.name}: value={check.value!r} target={check.target!r}")
        for note in result.notes:
            print(f"    note: {note}")
    assert result.passed, result.line()
