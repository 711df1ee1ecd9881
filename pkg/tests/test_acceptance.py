"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints a single PASS/FAIL line (with the failing items) to the
terminal. Run directly with ``python tests/test_acceptance.py`` for the
same report without pytest.
"""
import pytest

from specmarket import checks

CRITERIA = {
    1: lambda: checks.check_delay_validation(n_jobs=500_000, seed=0),
    2: checks.check_revenue_optimum,
    3: checks.check_social_optimum,
    4: checks.check_closed_forms,
    5: checks.check_stage_one,
    6: checks.check_degeneration,
    7: checks.check_convergence,
    8: checks.check_properties,
}


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_criterion(criterion, capsys):
    result = CRITERIA[criterion]()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, "\n".join(result.failures)


if __name__ == "__main__":
    for k in sorted(CRITERIA):
        print(CRITERIA[k]().line())
