"""The eleven acceptance criteria, one test each, with a PASS/FAIL line per criterion."""

import pytest

from hrom.acceptance import CHECKS, VerifyContext, run_check


@pytest.fixture(scope="module")
def ctx():
    return VerifyContext()


@pytest.mark.parametrize("name", [name for name, _ in CHECKS])
def test_criterion(name, ctx, capsys):
    result = run_check(name, ctx)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
