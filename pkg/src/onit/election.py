"""Domain model: contests, cards, manifests, batch subtotals, reported results.

All counts are exact integers and all derived shares exact ``Fraction``s so
that the accounting identities can be checked with equality, not tolerance.
Every type is immutable after construction; verification is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .errors import AuditError

#: Sentinel vote for a card that contains the contest but no valid choice,
#: and for cards that omit the contest entirely.  Scores 1/2 under every
#: plurality assorter.
NO_VOTE = ""

#: Manifest group id marking containers whose cards have linked CVRs.
LINKED = "LINKED"


@dataclass(frozen=True)
class Contest:
    """A single plurality contest under audit."""

    id: str
    candidates: tuple[str, ...]
    reported_winner: str
    cards_total: int
    risk_limit: Fraction

    def __post_init__(self):
        if not self.candidates:
            raise AuditError("INVALID_CONTEST", "contest has no candidates", contest=self.id)
        if len(set(self.candidates)) != len(self.candidates):
            raise AuditError("INVALID_CONTEST", "duplicate candidate ids", contest=self.id)
        if self.reported_winner not in self.candidates:
            raise AuditError("INVALID_CONTEST", "reported winner is not a candidate",
                             contest=self.id, winner=self.reported_winner)
        if self.cards_total < 1:
            raise AuditError("INVALID_CONTEST", "cards_total must be >= 1", contest=self.id)
        if not (0 < self.risk_limit < 1):
            raise AuditError("INVALID_CONTEST", "risk limit must lie in (0, 1)",
                             contest=self.id, risk_limit=str(self.risk_limit))


@dataclass(frozen=True)
class CardRecord:
    """One card's interpretation (machine or human): contest id -> candidate.

    A card may omit a contest entirely; assorters treat that the same as
    NO_VOTE.  Votes for unknown candidates are rejected at construction
    when the contest is supplied to ``validate_against``.
    """

    card_id: str
    votes: Mapping[str, str] = field(default_factory=dict)

    def vote_in(self, contest_id: str) -> str:
        return self.votes.get(contest_id, NO_VOTE)

    def validate_against(self, contest: Contest) -> None:
        v = self.vote_in(contest.id)
        if v != NO_VOTE and v not in contest.candidates:
            raise AuditError("UNKNOWN_CANDIDATE", "vote for a candidate not in the contest",
                             card=self.card_id, contest=contest.id, candidate=v)


@dataclass(frozen=True)
class ManifestEntry:
    container_id: str
    card_count: int
    group_id: str  # LINKED or a reporting-group id


@dataclass(frozen=True)
class BallotManifest:
    """Physical accounting of every card: container -> count -> reporting group."""

    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.container_id in seen:
                raise AuditError("DUPLICATE_ID", "duplicate container id",
                                 container=e.container_id)
            seen.add(e.container_id)
            if e.card_count < 1:
                raise AuditError("INVALID_MANIFEST", "container card_count must be >= 1",
                                 container=e.container_id)

    @property
    def total_cards(self) -> int:
        return sum(e.card_count for e in self.entries)

    def sorted_entries(self) -> tuple[ManifestEntry, ...]:
        # Canonical retrieval order: lexicographic by container id.
        return tuple(sorted(self.entries, key=lambda e: e.container_id))

    def group_sizes(self) -> dict[str, int]:
        sizes: dict[str, int] = {}
        for e in self.entries:
            if e.group_id != LINKED:
                sizes[e.group_id] = sizes.get(e.group_id, 0) + e.card_count
        return sizes

    def linked_cards(self) -> int:
        return sum(e.card_count for e in self.entries if e.group_id == LINKED)


@dataclass(frozen=True)
class GroupSubtotal:
    """Reported tally for one reporting group of cards without linked CVRs."""

    group_id: str
    cards: int
    tally: Mapping[str, int]  # candidate -> votes; remainder are NO_VOTE cards

    def __post_init__(self):
        if self.cards < 1:
            raise AuditError("INVALID_SUBTOTAL", "group must contain at least one card",
                             group=self.group_id)
        if any(n < 0 for n in self.tally.values()):
            raise AuditError("INVALID_SUBTOTAL", "negative tally entry", group=self.group_id)
        if sum(self.tally.values()) > self.cards:
            raise AuditError("INVALID_SUBTOTAL", "tally exceeds card count",
                             group=self.group_id, cards=self.cards)

    def novote_cards(self) -> int:
        return self.cards - sum(self.tally.values())


@dataclass(frozen=True)
class ReportedResults:
    """Everything the voting system reports: contest totals, linked CVRs, group subtotals."""

    totals: Mapping[str, int]            # candidate -> reported votes, contest-wide
    linked_cvrs: tuple[CardRecord, ...]  # the linked-CVR set, unordered
    group_subtotals: tuple[GroupSubtotal, ...]

    def cvrs_sorted(self) -> tuple[CardRecord, ...]:
        # Canonical CVR order used to match linked containers position-by-position.
        return tuple(sorted(self.linked_cvrs, key=lambda c: c.card_id))

    def subtotal_for(self, group_id: str) -> GroupSubtotal:
        for g in self.group_subtotals:
            if g.group_id == group_id:
                return g
        raise AuditError("UNKNOWN_GROUP", "no subtotal for group", group=group_id)


@dataclass(frozen=True)
class VerificationFinding:
    code: str          # MISMATCHED_COUNTS | MISMATCHED_TALLY | WINNER_DISAGREES
    message: str
    subject: str       # offending group / candidate / contest


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the pre-audit accounting checks; PASS only if all three hold."""

    card_counts_ok: bool
    tallies_ok: bool
    winner_ok: bool
    findings: tuple[VerificationFinding, ...]

    @property
    def passed(self) -> bool:
        return self.card_counts_ok and self.tallies_ok and self.winner_ok


def reported_winner(totals: Mapping[str, int]) -> str:
    """Plurality winner of a totals map; a tie is a hard error (nothing is auditable)."""
    if not totals:
        raise AuditError("EMPTY_TOTALS", "no candidates in totals")
    best = max(totals.values())
    leaders = sorted(c for c, n in totals.items() if n == best)
    if len(leaders) > 1:
        raise AuditError("TIE", "plurality tie: no auditable winner", leaders=leaders)
    return leaders[0]


def _linked_tally(linked_cvrs: Sequence[CardRecord], contest: Contest) -> dict[str, int]:
    tally = {c: 0 for c in contest.candidates}
    for cvr in linked_cvrs:
        v = cvr.vote_in(contest.id)
        if v != NO_VOTE:
            cvr.validate_against(contest)
            tally[v] += 1
    return tally


def verify_accounting(results: ReportedResults, manifest: BallotManifest,
                      contest: Contest) -> VerificationReport:
    """Check that the physical accounting is consistent with the reported votes
    and that the reported subtotals reproduce the reported winner.

    Three reconciliations, all of which must hold for PASS:
      (a) card counts: |linked| + sum of group sizes equals the contest's N,
          and the manifest agrees group-by-group with the subtotals;
      (b) tallies: linked CVRs plus group subtotals reproduce the contest
          totals candidate by candidate;
      (c) winner: the totals elect the reported winner.
    """
    findings: list[VerificationFinding] = []

    # (a) card-count reconciliation
    counts_ok = True
    manifest_groups = manifest.group_sizes()
    subtotal_groups = {g.group_id: g.cards for g in results.group_subtotals}
    if manifest.total_cards != contest.cards_total:
        counts_ok = False
        findings.append(VerificationFinding(
            "MISMATCHED_COUNTS",
            f"manifest holds {manifest.total_cards} cards, contest expects {contest.cards_total}",
            contest.id))
    if len(results.linked_cvrs) != manifest.linked_cards():
        counts_ok = False
        findings.append(VerificationFinding(
            "MISMATCHED_COUNTS",
            f"{len(results.linked_cvrs)} linked CVRs vs {manifest.linked_cards()} linked cards in manifest",
            LINKED))
    for gid in sorted(set(manifest_groups) | set(subtotal_groups)):
        if manifest_groups.get(gid) != subtotal_groups.get(gid):
            counts_ok = False
            findings.append(VerificationFinding(
                "MISMATCHED_COUNTS",
                f"group {gid}: manifest {manifest_groups.get(gid)} cards vs subtotal {subtotal_groups.get(gid)}",
                gid))
    cvr_ids = [c.card_id for c in results.linked_cvrs]
    if len(set(cvr_ids)) != len(cvr_ids):
        counts_ok = False
        findings.append(VerificationFinding(
            "MISMATCHED_COUNTS", "duplicate card ids among linked CVRs", LINKED))

    # (b) tally reconciliation, candidate by candidate.  A group whose tally
    # is internally impossible is rejected upstream (INVALID_SUBTOTAL names
    # it); among internally consistent groups the discrepancy is attributed
    # to the candidate, since any group could absorb it.
    tallies_ok = True
    linked = _linked_tally(results.linked_cvrs, contest)
    for cand in contest.candidates:
        recomputed = linked[cand] + sum(int(g.tally.get(cand, 0)) for g in results.group_subtotals)
        reported = int(results.totals.get(cand, 0))
        if recomputed != reported:
            tallies_ok = False
            findings.append(VerificationFinding(
                "MISMATCHED_TALLY",
                f"candidate {cand}: linked+groups give {recomputed}, reported {reported}",
                cand))

    # (c) winner recomputation
    winner_ok = True
    try:
        w = reported_winner(dict(results.totals))
        if w != contest.reported_winner:
            winner_ok = False
            findings.append(VerificationFinding(
                "WINNER_DISAGREES",
                f"totals elect {w}, reported winner is {contest.reported_winner}", w))
    except AuditError as exc:
        winner_ok = False
        findings.append(VerificationFinding("WINNER_DISAGREES", exc.message, contest.id))

    return VerificationReport(counts_ok, tallies_ok, winner_ok, tuple(findings))


def assorter_share(winner_votes: int, loser_votes: int, cards: int) -> Fraction:
    """Mean of the winner/loser plurality assorter over ``cards`` cards:
    winner scores 1, loser 0, every other card 1/2."""
    others = cards - winner_votes - loser_votes
    if others < 0:
        raise AuditError("INVALID_SUBTOTAL", "winner+loser exceed cards",
                         winner=winner_votes, loser=loser_votes, cards=cards)
    return Fraction(2 * winner_votes + others, 2 * cards)
