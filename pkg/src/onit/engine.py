"""Replayable audit session: plan, draw, record, update risk, stop or escalate.

The session is a deterministic state machine over the transcript events it
emits: rebuilding a session from its inputs and event log reproduces the
risk trajectory bit for bit.  One logical writer per session; reads see a
consistent snapshot.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from . import errors
from .assorters import (Assertion, OverstatementAssorter, assort, make_assertions,
                        overstatement_value)
from .election import (BallotManifest, CardRecord, Contest, LINKED, NO_VOTE,
                       ReportedResults, reported_winner, verify_accounting)
from .errors import AuditError
from .onecvr import OneLayout, build_one_layout, comparison_value
from .risk import (AlphaConfig, RiskState, alpha_update, make_alpha_state,
                   make_sprt_state, sprt_update)
from .sampling import CardLocation, DrawSequence, locate, next_uniform
from .transcript import Transcript

SETUP = "SETUP"
RUNNING = "RUNNING"
CONFIRMED = "CONFIRMED"
FULL_COUNT = "FULL_COUNT"
STALLED = "STALLED"


@dataclass(frozen=True)
class MethodConfig:
    """Risk-measuring choice for a session.

    method "alpha" runs the comparison audit against the ONE layout;
    "sprt" runs ballot polling on the raw assorter values.  For alpha,
    eta0_frac positions the initial alternative as a fraction of each
    assertion's comparison upper bound (defaults calibrated so that
    reported-correct audits at a 5% margin stop near published workloads).
    """

    method: str = "alpha"
    estimator: str = "shrink_trunc"
    eta0_frac: float = 0.99
    d: int = 600
    c: float = 0.5

    def __post_init__(self):
        if self.method not in ("alpha", "sprt"):
            raise AuditError("DOMAIN", "unknown method", method=self.method)

    def to_payload(self) -> dict:
        return {"method": self.method, "estimator": self.estimator,
                "eta0_frac": repr(self.eta0_frac), "d": self.d, "c": repr(self.c)}


@dataclass(frozen=True)
class DrawInstruction:
    ordinal: int
    container_id: str
    position: int
    group_id: str                       # LINKED or group id
    card_id: Optional[str] = None       # linked cards only
    cvr_votes: Optional[dict] = None    # linked cards only

    def to_payload(self) -> dict:
        p = {"ordinal": self.ordinal, "container": self.container_id,
             "position": self.position, "group": self.group_id}
        if self.card_id is not None:
            p["card_id"] = self.card_id
            p["cvr_votes"] = self.cvr_votes
        return p


@dataclass
class AuditSession:
    contest: Contest
    results: ReportedResults
    manifest: BallotManifest
    config: MethodConfig
    assertions: tuple[Assertion, ...]
    layouts: dict[str, OneLayout]
    risk: dict[str, RiskState]
    seq: DrawSequence
    transcript: Transcript
    status: str = RUNNING
    pending: dict[int, DrawInstruction] = field(default_factory=dict)
    mvr_log: list[tuple[int, CardRecord, int]] = field(default_factory=list)
    recorded: set[int] = field(default_factory=set)
    linked_order: tuple[CardRecord, ...] = ()

    @property
    def risk_limit(self) -> Fraction:
        return self.contest.risk_limit

    def measured_risks(self) -> dict[str, float]:
        return {aid: st.measured_risk() for aid, st in self.risk.items()}

    def passed(self, assertion_id: str) -> bool:
        return self.risk[assertion_id].measured_risk() <= float(self.risk_limit)


def _input_digest(contest: Contest, results: ReportedResults,
                  manifest: BallotManifest) -> str:
    blob = json.dumps({
        "contest": [contest.id, list(contest.candidates), contest.reported_winner,
                    contest.cards_total, str(contest.risk_limit)],
        "totals": {k: int(v) for k, v in sorted(results.totals.items())},
        "cvrs": [[c.card_id, dict(sorted(c.votes.items()))] for c in results.cvrs_sorted()],
        "groups": [[g.group_id, g.cards, {k: int(v) for k, v in sorted(g.tally.items())}]
                   for g in sorted(results.group_subtotals, key=lambda g: g.group_id)],
        "manifest": [[e.container_id, e.card_count, e.group_id]
                     for e in manifest.sorted_entries()],
    }, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def open_session(contest: Contest, results: ReportedResults,
                 manifest: BallotManifest, seed: str,
                 config: MethodConfig | None = None) -> AuditSession:
    """Verify the accounting, build assertions and layouts, set every
    measured risk to 1, and start the draw sequence.

    Refuses to open on any accounting failure or nonpositive margin.
    """
    config = config or MethodConfig()
    report = verify_accounting(results, manifest, contest)
    if not report.passed:
        first = report.findings[0]
        raise AuditError(first.code, first.message, subject=first.subject)

    assertions = make_assertions(contest, results)   # raises NONPOSITIVE_MARGIN
    layouts: dict[str, OneLayout] = {}
    risk: dict[str, RiskState] = {}
    for a in assertions:
        layouts[a.id] = build_one_layout(a, results, manifest)
        if config.method == "alpha":
            b = OverstatementAssorter(a)
            upper = float(b.upper)
            cfg = AlphaConfig(eta0=config.eta0_frac * upper,
                              estimator=config.estimator, d=config.d, c=config.c)
            risk[a.id] = make_alpha_state(contest.cards_total, upper, cfg)
        else:
            valid = int(results.totals.get(a.assorter.winner, 0)) + \
                int(results.totals.get(a.assorter.loser, 0))
            theta = int(results.totals.get(a.assorter.winner, 0)) / valid
            risk[a.id] = make_sprt_state(contest.cards_total, theta)

    session = AuditSession(contest, results, manifest, config, assertions,
                           layouts, risk, DrawSequence(seed), Transcript(),
                           linked_order=results.cvrs_sorted())
    session.transcript.append("OPEN", {
        "contest": contest.id,
        "winner": contest.reported_winner,
        "risk_limit": str(contest.risk_limit),
        "seed": seed,
        "cards": contest.cards_total,
        "method": config.to_payload(),
        "assertions": [a.id for a in assertions],
        "margins": {a.id: str(a.margin) for a in assertions},
        "inputs_digest": _input_digest(contest, results, manifest),
        "container_order": "lexicographic",
    })
    session.transcript.append("STATUS", {"status": RUNNING})
    return session


def draw_next(session: AuditSession) -> DrawInstruction:
    """Select the next card uniformly among the undrawn and say where it is."""
    if session.status != RUNNING:
        raise errors.wrong_state(RUNNING, session.status)
    n = session.contest.cards_total
    ordinal = next_uniform(session.seq, n)
    loc = locate(session.manifest, ordinal)
    instruction = _instruction(session, ordinal, loc)
    session.pending[ordinal] = instruction
    session.transcript.append("DRAW", dict(instruction.to_payload(),
                                           counter=session.seq.counter))
    return instruction


def _instruction(session: AuditSession, ordinal: int, loc: CardLocation) -> DrawInstruction:
    if loc.group_id == LINKED:
        cvr = session.linked_order[loc.linked_index]
        return DrawInstruction(ordinal, loc.container_id, loc.position, LINKED,
                               cvr.card_id, dict(sorted(cvr.votes.items())))
    return DrawInstruction(ordinal, loc.container_id, loc.position, loc.group_id)


def record_mvr(session: AuditSession, ordinal: int,
               mvr: CardRecord) -> list[tuple[str, Fraction, float]]:
    """Score one hand-read card against its comparison value and update the
    risk of every assertion still above its limit.

    Returns (assertion id, comparison value consumed, new measured risk) per
    assertion.  Assertions already at or below the limit stay frozen.
    """
    if session.status != RUNNING:
        raise errors.wrong_state(RUNNING, session.status)
    if ordinal in session.recorded:
        raise AuditError("DUPLICATE_RECORD", "ordinal already has an MVR",
                         ordinal=ordinal)
    instruction = session.pending.get(ordinal)
    if instruction is None:
        raise AuditError("UNKNOWN_ORDINAL", "ordinal was never drawn", ordinal=ordinal)
    mvr.validate_against(session.contest)

    out: list[tuple[str, Fraction, float]] = []
    risks_payload: dict[str, str] = {}
    for a in session.assertions:
        st = session.risk[a.id]
        frozen = st.measured_risk() <= float(session.risk_limit)
        if session.config.method == "alpha":
            b = OverstatementAssorter(a)
            cvr_a = comparison_value(session.layouts[a.id],
                                     instruction.card_id or "", instruction.group_id)
            x = overstatement_value(b, assort(a.assorter, mvr), cvr_a)
        else:
            x = assort(a.assorter, mvr)
        if not frozen:
            if session.config.method == "alpha":
                st = alpha_update(st, float(x))
            else:
                st = sprt_update(st, x)
            session.risk[a.id] = st
        out.append((a.id, x, st.measured_risk()))
        risks_payload[a.id] = repr(st.measured_risk())

    session.recorded.add(ordinal)
    session.pending.pop(ordinal, None)
    seq_no = len(session.transcript) + 1
    session.mvr_log.append((ordinal, mvr, seq_no))
    session.transcript.append("MVR", {"ordinal": ordinal,
                                      "votes": dict(sorted(mvr.votes.items()))})
    session.transcript.append("RISK", {"risks": risks_payload})

    if all(session.passed(a.id) for a in session.assertions):
        session.status = CONFIRMED
        session.transcript.append("STATUS", {"status": CONFIRMED})
    elif len(session.recorded) >= session.contest.cards_total:
        # Every card audited without confirming: the hand count decides.
        session.status = FULL_COUNT
        session.transcript.append("STATUS", {"status": FULL_COUNT})
    return out


def full_count(session: AuditSession, mvrs: Mapping[int, CardRecord]) -> str:
    """Final outcome once every card has been read: the hand count rules.

    ``mvrs`` maps every ordinal in [1, N] to its hand read (records already
    in the session's log may be omitted).  INCOMPLETE if any card is missing.
    """
    combined: dict[int, CardRecord] = {o: m for o, m, _ in session.mvr_log}
    combined.update(mvrs)
    n = session.contest.cards_total
    missing = n - len([o for o in combined if 1 <= o <= n])
    if missing > 0:
        raise AuditError("INCOMPLETE", "not every card has a hand read",
                         missing=missing)
    tally = {c: 0 for c in session.contest.candidates}
    for o in range(1, n + 1):
        v = combined[o].vote_in(session.contest.id)
        if v != NO_VOTE:
            tally[v] += 1
    winner = reported_winner(tally)
    session.status = FULL_COUNT
    session.transcript.append("STATUS", {"status": FULL_COUNT, "hand_winner": winner,
                                         "tally": tally})
    return winner


def plan_sample_size(session: AuditSession, error_rate: float = 0.0,
                     reps: int = 200, quantile: float = 0.9,
                     seed: str = "plan") -> int:
    """Monte Carlo planning estimate: the ``quantile`` of the stopping size
    over ``reps`` simulated audits in which the hand reads match the reported
    data, except that ``error_rate`` of cards flip to the loser."""
    from .simulate import plan_stopping_sizes  # local import; simulate builds on engine types
    sizes = plan_stopping_sizes(session, error_rate=error_rate, reps=reps, seed=seed)
    sizes.sort()
    idx = min(len(sizes) - 1, int(quantile * len(sizes)))
    return int(sizes[idx])


def replay(contest: Contest, results: ReportedResults, manifest: BallotManifest,
           transcript: Transcript) -> AuditSession:
    """Rebuild a session from its inputs and event log.

    Only MVR events carry information; draws, risks and statuses are
    recomputed from the seed and the hand reads, then compared line by line
    against the recorded transcript.  DIVERGENCE(seq) points at the first
    event the recomputation does not reproduce.
    """
    if not transcript.events or transcript.events[0].kind != "OPEN":
        raise AuditError("CHAIN_BROKEN", "transcript does not start with OPEN")
    open_payload = transcript.events[0].payload
    cfg_p = open_payload["method"]
    config = MethodConfig(method=cfg_p["method"], estimator=cfg_p["estimator"],
                          eta0_frac=float(cfg_p["eta0_frac"]), d=int(cfg_p["d"]),
                          c=float(cfg_p["c"]))
    session = open_session(contest, results, manifest, open_payload["seed"], config)
    for ev in transcript.events[2:]:
        if ev.kind == "DRAW":
            draw_next(session)
        elif ev.kind == "MVR":
            mvr = CardRecord(card_id=f"mvr-{ev.payload['ordinal']}",
                             votes=dict(ev.payload["votes"]))
            record_mvr(session, int(ev.payload["ordinal"]), mvr)
        # RISK and STATUS events are emitted by the calls above.
    for ours, theirs in zip(session.transcript.events, transcript.events):
        if ours.to_line() != theirs.to_line():
            raise AuditError("DIVERGENCE",
                             f"replay diverges at event {theirs.seq}", seq=theirs.seq)
    if len(session.transcript) != len(transcript):
        seq = min(len(session.transcript), len(transcript)) + 1
        raise AuditError("DIVERGENCE", f"replay diverges at event {seq}", seq=seq)
    return session
