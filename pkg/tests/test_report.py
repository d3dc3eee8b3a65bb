"""Report aggregation semantics."""

import pytest

from hsflow.report import NOT_APPLICABLE, VerificationReport


def test_add_bound_pass_fail():
    rep = VerificationReport()
    rep.add_bound("ok", 0.5, 1.0)
    rep.add_bound("bad", 2.0, 1.0)
    assert [r.status for r in rep] == ["pass", "fail"]
    assert not rep.passed


def test_not_applicable_does_not_fail():
    rep = VerificationReport()
    rep.add("skipped", NOT_APPLICABLE)
    assert rep.passed
    assert not rep.applicable
    assert rep.to_json_list()[0]["pass"] is None


def test_tolerance_is_mandatory():
    rep = VerificationReport()
    with pytest.raises(ValueError):
        rep.add("x", "pass")
    with pytest.raises(ValueError):
        rep.add("x", "maybe", tolerance=1.0)


def test_table_lists_every_check():
    rep = VerificationReport()
    rep.add_bound("alpha", 0.0, 1.0, n=65, h=0.03125)
    rep.add("beta", NOT_APPLICABLE)
    text = rep.table()
    assert "alpha" in text and "beta" in text and "not-applicable" in text


def test_extend_merges():
    a, b = VerificationReport(), VerificationReport()
    a.add_bound("x", 0.0, 1.0)
    b.add_bound("y", 2.0, 1.0)
    a.extend(b)
    assert len(a) == 2 and not a.passed
