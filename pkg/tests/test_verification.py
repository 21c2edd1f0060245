import pytest

from walkersym.families import cw_killing_basis
from walkersym.verification import (
    check_infinite_dimensional, check_pc_cw_consistency, killing_rank, verify_theorems,
)

SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture(scope="module")
def reports():
    return {s: verify_theorems(seed=s) for s in SEEDS}


def verdicts(report):
    return [(c.clause, c.subject, c.kind, c.level, c.observed, c.passed) for c in report.checks]


def test_full_run_passes(reports):
    r = reports[0]
    assert r.passed and r.exit_code == 0, [c.text() for c in r.failures]
    assert not r.inconclusive
    assert sum(c.counts for c in r.checks) > 150


def test_verdicts_do_not_depend_on_seed(reports):
    base = verdicts(reports[0])
    for s in SEEDS[1:]:
        assert verdicts(reports[s]) == base


def test_witnesses_change_with_seed(reports):
    w = [[c.witness for c in reports[s].checks if c.witness] for s in SEEDS]
    assert all(w[0]) and any(ws != w[0] for ws in w[1:])


def test_proper_checks_carry_witnesses(reports):
    proper = [c for c in reports[0].checks if c.kind == "proper"]
    assert proper and all(c.passed and c.witness for c in proper)


def test_self_test_fails_with_witness():
    r = verify_theorems(seed=0, family="CW", inject_fault=True)
    assert r.exit_code == 4
    (bad,) = r.failures
    assert "sign-flipped" in bad.subject and bad.witness
    assert r.records()[-1]["result"] == "fail"


def test_single_family():
    r = verify_theorems(family="Nb")
    assert r.passed
    assert {c.clause.split("(")[0] for c in r.checks} == {"N_b"}


def test_cw_algebra_is_four_dimensional():
    assert killing_rank(cw_killing_basis(1)) == 4
    assert killing_rank(cw_killing_basis(-1)) == 4
    assert killing_rank(cw_killing_basis(1)[:2] * 2) == 2


def test_pc_reproduces_cw_up_to_d_y():
    checks = check_pc_cw_consistency()
    assert all(c.passed for c in checks)
    (obs,) = [c for c in checks if c.kind == "observation"]
    assert obs.observed == "(0, 0, 1)"
    matched = [c.observed for c in checks if c.observed.startswith("matches")]
    assert matched == ["matches c1", "matches c2", "matches c3"]


def test_random_collineations():
    checks = check_infinite_dimensional(seed=7, n=3)
    assert len(checks) == 7 and all(c.passed for c in checks)


def test_records_summary(reports):
    recs = reports[0].records()
    assert recs[-1]["kind"] == "summary" and recs[-1]["result"] == "pass"
    assert {r["result"] for r in recs[:-1]} <= {"pass", "info"}
