"""Full verification suite, one test per criterion.

Each test prints its pass/fail line (visible with pytest -s or on failure)
and asserts the criterion at its stated tolerance. The same checks back
the `sigeo verify-all` command.
"""

import json

import pytest

from sigeo import acceptance


@pytest.mark.parametrize("key,check", acceptance.CRITERIA, ids=[k for k, _ in acceptance.CRITERIA])
def test_criterion(key, check):
    result = check(seed=0)
    print(result.line(), json.dumps(result.details, default=str))
    assert result.passed, f"{result.name}: {result.details}"
