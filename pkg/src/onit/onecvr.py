"""Build the comparison layout: per-group mean assorter values.

Cards without linked CVRs are compared against their reporting group's mean
assorter value (one synthetic comparison value per group); cards with linked
CVRs are compared against their own record.  Group means are exact rationals
so the layout identity — the weighted means reassemble the contest-wide
reported mean exactly — is testable with equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from .assorters import Assertion, assort
from .election import BallotManifest, LINKED, ReportedResults, assorter_share
from .errors import AuditError

Rat = Union[int, Fraction]


@dataclass(frozen=True)
class OneLayout:
    """Lookup from a drawn card to the comparison value it is scored against."""

    assertion_id: str
    linked: Mapping[str, Fraction]       # card_id -> assorter value of its CVR
    group_means: Mapping[str, Fraction]  # group_id -> mean assorter value
    group_sizes: Mapping[str, int]

    def identity_holds(self, reported_mean: Fraction, cards_total: int) -> bool:
        total = sum(self.linked.values(), Fraction(0))
        total += sum(self.group_sizes[g] * m for g, m in self.group_means.items())
        return total == reported_mean * cards_total


def build_one_layout(assertion: Assertion, results: ReportedResults,
                     manifest: BallotManifest) -> OneLayout:
    """Group means from subtotals, linked map from the CVR file.

    Requires the accounting checks to have passed; the margin positivity is
    enforced by the Assertion itself.
    """
    spec = assertion.assorter
    linked = {cvr.card_id: assort(spec, cvr) for cvr in results.linked_cvrs}
    sizes = manifest.group_sizes()
    means: dict[str, Fraction] = {}
    for gid, cards in sizes.items():
        sub = results.subtotal_for(gid)
        w = int(sub.tally.get(spec.winner, 0))
        l = int(sub.tally.get(spec.loser, 0))
        means[gid] = spec.upper * assorter_share(w, l, cards)
    return OneLayout(assertion.id, linked, means, sizes)


def comparison_value(layout: OneLayout, card_id: str, group_id: str) -> Fraction:
    """The assorter value of the record a drawn card is compared against."""
    if group_id == LINKED:
        try:
            return layout.linked[card_id]
        except KeyError:
            raise AuditError("UNKNOWN_CARD", "no linked CVR for card", card=card_id)
    try:
        return layout.group_means[group_id]
    except KeyError:
        raise AuditError("UNKNOWN_GROUP", "no mean for group", group=group_id)


def net_overstatement(cvrs: list[Rat], truth: list[Rat]) -> Fraction:
    """Net margin overstatement in the two-candidate +1/0/-1 encoding.

    Each entry is +1 (winner), -1 (loser) or 0; synthetic comparison records
    may carry any rational in [-1, 1].  The result depends on the records
    only through their sum.
    """
    if len(cvrs) != len(truth):
        raise AuditError("LENGTH_MISMATCH", "record and truth lists differ in length",
                         cvrs=len(cvrs), truth=len(truth))
    for side, vals in (("cvr", cvrs), ("truth", truth)):
        for x in vals:
            if not -1 <= Fraction(x) <= 1:
                raise AuditError("DOMAIN", f"{side} encoding outside [-1, 1]", value=str(x))
    return sum((Fraction(c) - Fraction(b) for c, b in zip(cvrs, truth)), Fraction(0))
