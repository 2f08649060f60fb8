"""Assorter algebra for plurality contests.

An assorter maps one card's votes to [0, u]; the audit tests the claim that
the mean of the assorter over the true (hand-read) cards exceeds 1/2.  The
comparison form rescales the per-card discrepancy between the hand read and
the system's record into a second bounded assorter whose mean exceeds 1/2
exactly when the original's does.  All arithmetic here is exact rational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .election import CardRecord, Contest, ReportedResults, assorter_share
from .errors import AuditError, nonpositive_margin

Rat = Union[int, Fraction]

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class AssorterSpec:
    """Pairwise winner/loser plurality assorter for one contest."""

    contest_id: str
    winner: str
    loser: str
    upper: Fraction = Fraction(1)

    def __post_init__(self):
        if self.winner == self.loser:
            raise AuditError("INVALID_ASSERTION", "winner and loser coincide",
                             winner=self.winner)
        if self.upper <= 0:
            raise AuditError("INVALID_ASSERTION", "assorter upper bound must be positive")

    @property
    def id(self) -> str:
        return f"{self.contest_id}:{self.winner}>{self.loser}"


@dataclass(frozen=True)
class Assertion:
    """The claim that the true mean of ``assorter`` exceeds 1/2, with its
    reported mean and margin precomputed from the system's data."""

    assorter: AssorterSpec
    reported_mean: Fraction        # mean of the assorter over the reported data
    margin: Fraction               # 2*reported_mean - 1

    def __post_init__(self):
        if self.margin != 2 * self.reported_mean - 1:
            raise AuditError("INVALID_ASSERTION", "margin must equal 2*mean - 1")
        if not (0 < self.margin <= 2 * self.assorter.upper - 1):
            raise nonpositive_margin(str(self.margin))

    @property
    def id(self) -> str:
        return self.assorter.id


@dataclass(frozen=True)
class OverstatementAssorter:
    """Comparison assorter derived from an assertion; values lie in
    [0, 2u/(2u - v)] and its null mean is 1/2."""

    base: Assertion

    @property
    def upper(self) -> Fraction:
        u, v = self.base.assorter.upper, self.base.margin
        return 2 * u / (2 * u - v)

    @property
    def reported_correct_value(self) -> Fraction:
        # Value every card takes when the hand read matches its comparison record.
        u, v = self.base.assorter.upper, self.base.margin
        return u / (2 * u - v)


def assort(spec: AssorterSpec, card: CardRecord) -> Fraction:
    """Score one card: winner -> u, loser -> 0, anything else -> u/2.

    "Anything else" covers votes for other candidates, explicit no-votes,
    and cards that do not contain the contest at all.
    """
    vote = card.vote_in(spec.contest_id)
    if vote == spec.winner:
        return spec.upper
    if vote == spec.loser:
        return Fraction(0)
    return spec.upper / 2


def assorter_mean_and_margin(spec: AssorterSpec,
                             results: ReportedResults,
                             contest: Contest) -> tuple[Fraction, Fraction]:
    """Reported assorter mean and margin computed from tallies alone.

    The mean counts u per reported winner vote, 0 per loser vote and u/2 for
    everything else, over all N cards (cards in groups enter through their
    subtotals).  Raises NONPOSITIVE_MARGIN when the data do not support the
    reported winner.
    """
    w = int(results.totals.get(spec.winner, 0))
    l = int(results.totals.get(spec.loser, 0))
    mean = spec.upper * assorter_share(w, l, contest.cards_total)
    margin = 2 * mean - 1
    if margin <= 0:
        raise nonpositive_margin(str(margin))
    return mean, margin


def make_assertions(contest: Contest, results: ReportedResults) -> tuple[Assertion, ...]:
    """One pairwise assertion per (reported winner, other candidate)."""
    out = []
    for other in contest.candidates:
        if other == contest.reported_winner:
            continue
        spec = AssorterSpec(contest.id, contest.reported_winner, other)
        mean, margin = assorter_mean_and_margin(spec, results, contest)
        out.append(Assertion(spec, mean, margin))
    return tuple(out)


def overstatement_value(b: OverstatementAssorter, mvr_assort: Rat,
                        cvr_assort: Rat) -> Fraction:
    """(u + A(mvr) - A(cvr)) / (2u - v); lands in [0, 2u/(2u-v)] by construction.

    ``cvr_assort`` may be a reporting group's mean assorter value, so any
    rational in [0, u] is accepted on either side.
    """
    u, v = b.base.assorter.upper, b.base.margin
    mvr_assort = Fraction(mvr_assort)
    cvr_assort = Fraction(cvr_assort)
    if not (0 <= mvr_assort <= u) or not (0 <= cvr_assort <= u):
        raise AuditError("DOMAIN", "assorter values must lie in [0, u]",
                         mvr=str(mvr_assort), cvr=str(cvr_assort), u=str(u))
    return (u + mvr_assort - cvr_assort) / (2 * u - v)


def overstatement_support(v: Rat, u: Rat = 1) -> tuple[Fraction, Fraction, Fraction]:
    """Possible comparison-assorter values when the comparison record is the
    contest-wide mean (v+1)/2, ascending.

    Defined for u = 1 and 0 < v <= 1; at v = 1 the set degenerates to
    {0, 1/2, 1}, the raw assorter's own support.
    """
    v = Fraction(v)
    u = Fraction(u)
    if u != 1:
        raise AuditError("DOMAIN", "support set is defined for u = 1", u=str(u))
    if not (0 < v <= 1):
        raise AuditError("DOMAIN", "margin must lie in (0, 1]", v=str(v))
    lo = (1 - (v + 1) / 2) / (2 - v)
    hi = (2 - (v + 1) / 2) / (2 - v)
    return (lo, HALF, hi)


def affine_recover(b_value: Rat, v: Rat, u: Rat = 1) -> Fraction:
    """Invert the comparison transform for the contest-total case.

    When every comparison record equals the contest-wide mean (v+1)/2, the
    comparison values are an affine image of the raw assorter; shifting the
    minimum support point to 0 and rescaling the null mean back to 1/2
    recovers the raw value exactly.
    """
    v = Fraction(v)
    u = Fraction(u)
    b_value = Fraction(b_value)
    shift = (u - (v + 1) / 2) / (2 * u - v)
    scale = HALF / (HALF - shift)
    return scale * (b_value - shift)


def taint(overstatement: Rat, max_overstatement: Rat) -> Fraction:
    """Overstatement as a fraction of its maximum possible value; always <= 1.

    The bound for a card or batch is its reported assorter value, so a batch
    with a zero bound is never sampled under PPEB and must not reach here.
    """
    max_overstatement = Fraction(max_overstatement)
    if max_overstatement == 0:
        raise AuditError("DIVISION_BY_ZERO_BOUND",
                         "zero error bound: batch is never sampled under PPEB")
    if max_overstatement < 0:
        raise AuditError("DOMAIN", "error bound must be positive",
                         bound=str(max_overstatement))
    t = Fraction(overstatement) / max_overstatement
    if t > 1:
        raise AuditError("DOMAIN", "overstatement exceeds its stated bound",
                         taint=str(t))
    return t
