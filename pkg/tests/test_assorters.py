from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from onit.assorters import (Assertion, AssorterSpec, OverstatementAssorter,
                            affine_recover, assort, assorter_mean_and_margin,
                            make_assertions, overstatement_support,
                            overstatement_value, taint)
from onit.election import CardRecord, Contest
from onit.errors import AuditError

SPEC = AssorterSpec("c", "Alice", "Bob")
HALF = Fraction(1, 2)


def _assertion(margin: Fraction, upper: Fraction = Fraction(1)) -> Assertion:
    mean = (margin + 1) / 2
    return Assertion(AssorterSpec("c", "Alice", "Bob", upper), mean, margin)


def test_assort_values():
    assert assort(SPEC, CardRecord("1", {"c": "Alice"})) == 1
    assert assort(SPEC, CardRecord("2", {"c": "Bob"})) == 0
    assert assort(SPEC, CardRecord("3", {})) == HALF           # contest absent
    assert assort(SPEC, CardRecord("4", {"c": ""})) == HALF    # explicit no-vote
    three = AssorterSpec("c", "Alice", "Bob")
    assert assort(three, CardRecord("5", {"c": "Carol"})) == HALF


def test_mean_and_margin_contrived(contrived_900_election):
    contest, results, _ = contrived_900_election
    mean, margin = assorter_mean_and_margin(SPEC, results, contest)
    assert mean == Fraction(10_500, 20_000)
    assert margin == Fraction(1, 20)


def test_mean_and_margin_unanimous():
    contest = Contest("c", ("Alice", "Bob"), "Alice", 4, Fraction(1, 20))
    from onit.election import ReportedResults
    results = ReportedResults({"Alice": 4, "Bob": 0}, (), ())
    mean, margin = assorter_mean_and_margin(SPEC, results, contest)
    assert mean == 1 and margin == 1


def test_mean_and_margin_tie_rejected():
    contest = Contest("c", ("Alice", "Bob"), "Alice", 4, Fraction(1, 20))
    from onit.election import ReportedResults
    results = ReportedResults({"Alice": 2, "Bob": 2}, (), ())
    with pytest.raises(AuditError) as err:
        assorter_mean_and_margin(SPEC, results, contest)
    assert err.value.code == "NONPOSITIVE_MARGIN"


def test_overstatement_value_endpoints():
    a = _assertion(Fraction(1, 20))
    b = OverstatementAssorter(a)
    # agreement sits at u/(2u-v)
    assert overstatement_value(b, 1, 1) == Fraction(1) / Fraction(39, 20)
    assert overstatement_value(b, HALF, HALF) == Fraction(20, 39)
    # two-vote overstatement bottoms out at 0; the mirror tops out at the bound
    assert overstatement_value(b, 0, 1) == 0
    assert overstatement_value(b, 1, 0) == Fraction(40, 39) == b.upper


def test_overstatement_value_monotone():
    a = _assertion(Fraction(1, 20))
    b = OverstatementAssorter(a)
    grid = [Fraction(k, 8) for k in range(9)]
    for c in grid:
        vals = [overstatement_value(b, m, c) for m in grid]
        assert vals == sorted(vals)
    for m in grid:
        vals = [overstatement_value(b, m, c) for c in grid]
        assert vals == sorted(vals, reverse=True)


def test_overstatement_support_values():
    lo, mid, hi = overstatement_support(Fraction(1, 2))
    assert (lo, mid, hi) == (Fraction(1, 6), HALF, Fraction(5, 6))
    lo, mid, hi = overstatement_support(Fraction(1, 20))
    assert lo == Fraction(2 - 1 - Fraction(1, 20), 2) / Fraction(39, 20)
    # unanimity collapses the support onto the raw assorter's
    assert overstatement_support(1) == (0, HALF, 1)


def test_overstatement_support_matches_direct_evaluation():
    # independent route: push the three raw values through the comparison
    # formula with the contest-wide record (v+1)/2
    for k in range(1, 20):
        v = Fraction(k, 20)
        a = _assertion(v)
        b = OverstatementAssorter(a)
        cvr = (v + 1) / 2
        direct = tuple(sorted(overstatement_value(b, m, cvr)
                              for m in (Fraction(0), HALF, Fraction(1))))
        assert overstatement_support(v) == direct


def test_affine_recovery_grid():
    # 99-point margin grid x 3 assorter values, exact round trip
    for k in range(1, 100):
        v = Fraction(k, 100)
        a = _assertion(v)
        b = OverstatementAssorter(a)
        cvr = (v + 1) / 2
        for raw in (Fraction(0), HALF, Fraction(1)):
            assert affine_recover(overstatement_value(b, raw, cvr), v) == raw


def test_affine_recovery_null_fixed_point():
    assert affine_recover(HALF, Fraction(1, 20)) == HALF


@given(st.integers(1, 12))
def test_equivalence_small_populations(n):
    """means of raw and comparison assorters straddle 1/2 together, exactly."""
    values = (Fraction(0), HALF, Fraction(1))
    u = Fraction(1)
    for counts_b in _compositions(n):
        mean_b = sum(c * v for c, v in zip(counts_b, values)) / n
        for counts_c in _compositions(n):
            mean_c = sum(c * v for c, v in zip(counts_c, values)) / n
            v = 2 * mean_c - 1
            if v <= 0:
                continue
            mean_over = (u + mean_b - mean_c) / (2 * u - v)
            assert (mean_over > HALF) == (mean_b > HALF)


def _compositions(n):
    for a in range(n + 1):
        for b in range(n + 1 - a):
            yield (a, b, n - a - b)


def test_taint():
    assert taint(0, Fraction(9, 10)) == 0
    assert taint(Fraction(9, 10), Fraction(9, 10)) == 1
    assert taint(Fraction(2, 5), Fraction(4, 5)) == HALF


def test_taint_zero_bound():
    with pytest.raises(AuditError) as err:
        taint(0, 0)
    assert err.value.code == "DIVISION_BY_ZERO_BOUND"


def test_make_assertions_pairwise():
    contest = Contest("c", ("A", "B", "C"), "A", 10, Fraction(1, 20))
    from onit.election import ReportedResults
    results = ReportedResults({"A": 6, "B": 3, "C": 1}, (), ())
    assertions = make_assertions(contest, results)
    assert [a.id for a in assertions] == ["c:A>B", "c:A>C"]
    assert assertions[0].margin == 2 * Fraction(6 + HALF * 1, 10) - 1


def test_assertion_rejects_nonpositive_margin():
    with pytest.raises(AuditError) as err:
        _assertion(Fraction(0))
    assert err.value.code == "NONPOSITIVE_MARGIN"
