from __future__ import annotations

from fractions import Fraction

import pytest

from onit import engine as eng
from onit.election import (BallotManifest, CardRecord, Contest, GroupSubtotal,
                           LINKED, ManifestEntry, ReportedResults)
from onit.errors import AuditError
from onit.simulate import Scenario
from onit.transcript import parse_lines


def _small_session(seed="seedling", method="alpha"):
    sc = Scenario(name="small", linked=(80, 10, 10))
    contest, results, manifest = sc.to_election()
    return eng.open_session(contest, results, manifest, seed,
                            eng.MethodConfig(method=method))


def truth_for(session, instruction) -> CardRecord:
    """Hand read agreeing with the reported data: the linked CVR itself, or
    the canonical truth layout of the card's group (winners first)."""
    cid = session.contest.id
    if instruction.group_id == LINKED:
        return CardRecord(f"mvr-{instruction.ordinal}", dict(instruction.cvr_votes))
    sub = session.results.subtotal_for(instruction.group_id)
    w = sub.tally.get("Alice", 0)
    l = sub.tally.get("Bob", 0)
    pos = instruction.position
    if pos <= w:
        votes = {cid: "Alice"}
    elif pos <= w + l:
        votes = {cid: "Bob"}
    else:
        votes = {}
    return CardRecord(f"mvr-{instruction.ordinal}", votes)


def test_open_session_contrived(contrived_900_election):
    contest, results, manifest = contrived_900_election
    session = eng.open_session(contest, results, manifest, "20230319",
                               eng.MethodConfig())
    assert session.status == eng.RUNNING
    assert [a.id for a in session.assertions] == ["contest-1:Alice>Bob"]
    assert session.measured_risks() == {"contest-1:Alice>Bob": 1.0}


def test_open_session_refuses_tie():
    contest = Contest("c", ("A", "B"), "A", 4, Fraction(1, 20))
    results = ReportedResults({"A": 2, "B": 2}, (),
                              (GroupSubtotal("g", 4, {"A": 2, "B": 2}),))
    manifest = BallotManifest((ManifestEntry("g", 4, "g"),))
    with pytest.raises(AuditError) as err:
        eng.open_session(contest, results, manifest, "s")
    assert err.value.code in ("WINNER_DISAGREES", "NONPOSITIVE_MARGIN", "TIE")


def test_three_candidates_two_assertions():
    contest = Contest("c", ("A", "B", "C"), "A", 10, Fraction(1, 20))
    results = ReportedResults({"A": 6, "B": 3, "C": 1}, (),
                              (GroupSubtotal("g", 10, {"A": 6, "B": 3, "C": 1}),))
    manifest = BallotManifest((ManifestEntry("g", 10, "g"),))
    session = eng.open_session(contest, results, manifest, "s")
    assert len(session.assertions) == 2


def test_draw_and_record_happy_path(contrived_900_election):
    contest, results, manifest = contrived_900_election
    session = eng.open_session(contest, results, manifest, "20230319")
    instruction = eng.draw_next(session)
    mvr = truth_for(session, instruction)
    updates = eng.record_mvr(session, instruction.ordinal, mvr)
    aid, x, risk = updates[0]
    if instruction.group_id == LINKED:
        # agreement lands on u/(2u-v) = 1/1.95 = 20/39
        assert x == Fraction(20, 39)
    assert 0 < risk <= 1


def test_record_against_group_mean(contrived_900_election):
    contest, results, manifest = contrived_900_election
    session = eng.open_session(contest, results, manifest, "x")
    # draw until a card from a 0.9-mean precinct comes up
    while True:
        instruction = eng.draw_next(session)
        if instruction.group_id != LINKED:
            sub = session.results.subtotal_for(instruction.group_id)
            if sub.tally["Alice"] == 900:
                break
    updates = eng.record_mvr(session, instruction.ordinal,
                             CardRecord("m", {"contest-1": "Bob"}))
    _, x, _ = updates[0]
    # (1 + 0 - 0.9)/1.95 = 2/39
    assert x == Fraction(2, 39)


def test_duplicate_and_unknown_records():
    session = _small_session()
    instruction = eng.draw_next(session)
    eng.record_mvr(session, instruction.ordinal, truth_for(session, instruction))
    with pytest.raises(AuditError) as err:
        eng.record_mvr(session, instruction.ordinal, CardRecord("m", {}))
    assert err.value.code == "DUPLICATE_RECORD"
    with pytest.raises(AuditError) as err:
        eng.record_mvr(session, instruction.ordinal + 10_000, CardRecord("m", {}))
    assert err.value.code == "UNKNOWN_ORDINAL"


def run_to_completion(session, max_draws=None):
    n = session.contest.cards_total
    limit = max_draws or n
    while session.status == eng.RUNNING and len(session.recorded) < limit:
        instruction = eng.draw_next(session)
        eng.record_mvr(session, instruction.ordinal, truth_for(session, instruction))
    return session


def test_session_confirms_clean_audit():
    session = run_to_completion(_small_session())
    assert session.status == eng.CONFIRMED
    aid = session.assertions[0].id
    assert session.risk[aid].measured_risk() <= float(session.risk_limit)


def test_draw_after_confirmed_is_wrong_state():
    session = run_to_completion(_small_session())
    with pytest.raises(AuditError) as err:
        eng.draw_next(session)
    assert err.value.code == "WRONG_STATE"


def test_confirmed_requires_all_assertions_passed():
    session = run_to_completion(_small_session())
    assert all(session.passed(a.id) for a in session.assertions)


def test_full_count_paths():
    sc = Scenario(name="tiny", linked=(6, 3, 1))
    contest, results, manifest = sc.to_election()
    session = eng.open_session(contest, results, manifest, "fc")
    with pytest.raises(AuditError) as err:
        eng.full_count(session, {})
    assert err.value.code == "INCOMPLETE"
    agree = {o: CardRecord(f"m{o}", {"contest-1": "Alice"} if o <= 6 else
                           ({"contest-1": "Bob"} if o <= 9 else {}))
             for o in range(1, 11)}
    assert eng.full_count(session, agree) == "Alice"
    # flipped hand reads elect the other candidate
    session2 = eng.open_session(contest, results, manifest, "fc")
    flipped = {o: CardRecord(f"m{o}", {"contest-1": "Bob"} if o <= 6 else
                             ({"contest-1": "Alice"} if o <= 9 else {}))
               for o in range(1, 11)}
    assert eng.full_count(session2, flipped) == "Bob"


def test_replay_round_trip():
    session = run_to_completion(_small_session(seed="replay-seed"))
    text = session.transcript.dumps()
    sc = Scenario(name="small", linked=(80, 10, 10))
    contest, results, manifest = sc.to_election()
    replayed = eng.replay(contest, results, manifest, parse_lines(text.splitlines()))
    assert replayed.transcript.dumps() == text
    assert replayed.status == eng.CONFIRMED


def test_replay_detects_tampered_mvr():
    session = run_to_completion(_small_session(seed="tamper-seed"))
    lines = session.transcript.dumps().splitlines()
    # flip one hand read and recompute every digest downstream
    import hashlib as h
    import json
    tampered = []
    prev = "0" * 64
    changed = False
    for raw in lines:
        obj = json.loads(raw)
        if not changed and obj["kind"] == "MVR":
            votes = obj["payload"]["votes"]
            votes["contest-1"] = "Bob" if votes.get("contest-1") == "Alice" else "Alice"
            changed = True
        obj["prev_digest"] = prev
        line = json.dumps(obj, sort_keys=True, separators=(",", ":"))
        prev = h.sha256(line.encode()).hexdigest()
        tampered.append(line)
    assert changed
    sc = Scenario(name="small", linked=(80, 10, 10))
    contest, results, manifest = sc.to_election()
    with pytest.raises(AuditError) as err:
        eng.replay(contest, results, manifest, parse_lines(tampered))
    assert err.value.code == "DIVERGENCE"
    assert err.value.details["seq"] > 1


def test_plan_sample_size_smoke():
    session = _small_session()
    estimate = eng.plan_sample_size(session, reps=100, seed="plan-smoke")
    assert 1 <= estimate <= session.contest.cards_total


def test_unknown_candidate_mvr_rejected():
    session = _small_session()
    instruction = eng.draw_next(session)
    with pytest.raises(AuditError) as err:
        eng.record_mvr(session, instruction.ordinal,
                       CardRecord("m", {"contest-1": "Mallory"}))
    assert err.value.code == "UNKNOWN_CANDIDATE"


def test_exhaustion_without_confirmation_escalates():
    # tiny election whose margin is honest but every hand read contradicts it:
    # sampling runs out and the session escalates to the full count
    sc = Scenario(name="micro", linked=(5, 3, 0))
    contest, results, manifest = sc.to_election()
    session = eng.open_session(contest, results, manifest, "exhaust")
    for _ in range(contest.cards_total):
        instruction = eng.draw_next(session)
        eng.record_mvr(session, instruction.ordinal,
                       CardRecord("m", {"contest-1": "Bob"}))
        if session.status != eng.RUNNING:
            break
    assert session.status == eng.FULL_COUNT
    with pytest.raises(AuditError) as err:
        eng.draw_next(session)
    assert err.value.code == "WRONG_STATE"
    # the hand count settles the outcome from the recorded reads
    assert eng.full_count(session, {}) == "Bob"


def test_replay_with_wrong_inputs_diverges():
    session = run_to_completion(_small_session(seed="inputs-seed"))
    text = session.transcript.dumps()
    altered = Scenario(name="small", linked=(81, 9, 10))  # same N, shifted tally
    contest, results, manifest = altered.to_election()
    from onit.transcript import parse_lines
    with pytest.raises(AuditError) as err:
        eng.replay(contest, results, manifest, parse_lines(text.splitlines()))
    assert err.value.code == "DIVERGENCE"
