"""Acceptance suite: every criterion at its stated tolerance, one PASS/FAIL
line per criterion on the terminal.

    pytest tests/test_acceptance.py -v
"""

import json

import pytest

from degob import claims

pytestmark = pytest.mark.slow

IDS = list(claims.CLAIMS)


@pytest.fixture(scope="module")
def results():
    return {}


def test_claim_ids_cover_criteria_once():
    assert len(IDS) == 10
    assert len(set(claims.CLAIMS.values())) == len(IDS)
    with pytest.raises(claims.UnknownClaim):
        claims.run("bogus-id")


@pytest.mark.parametrize("claim_id", IDS)
def test_criterion(claim_id, results, capsys):
    res = claims.run(claim_id, seed=0)
    results[claim_id] = res
    with capsys.disabled():
        print("\n" + res.summary())
    assert res.checks, "claim recorded no checks"
    json.loads(res.to_json())
    assert res.passed, "; ".join(res.failures())


def test_criteria_numbered_one_to_ten(results):
    seen = sorted(r.criterion for r in results.values())
    if len(seen) == len(IDS):
        assert seen == list(range(1, 11))
