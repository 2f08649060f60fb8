"""Record real service exchanges for the console's contract tests.

Drives the HTTP facade in process (no sockets) through a complete
reported-correct audit of the two-candidate demo election until the session
confirms, capturing every request/response pair plus the final transcript.
The transcript is replayed through the engine before writing anything, so
the recorded fixture is known to be clean.

Run from the repository root:  python3 frontend/scripts/record_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi.testclient import TestClient

from onit import engine as eng
from onit.election import LINKED
from onit.formats import emit_contest, emit_cvrs, emit_manifest, emit_subtotals
from onit.service import app
from onit.simulate import Scenario
from onit.transcript import parse_lines

SEED = "console-2"          # confirms the demo election in 135 draws
OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "session.json"


def truth_votes(contest_id, results, instruction) -> dict:
    """Hand read matching the reported data for one drawn card."""
    if instruction["group"] == LINKED:
        return dict(instruction["cvr_votes"])
    gid = instruction["group"]
    sub = next(g for g in results.group_subtotals if g.group_id == gid)
    w = sub.tally.get("Alice", 0)
    l = sub.tally.get("Bob", 0)
    pos = instruction["position"]
    if pos <= w:
        return {contest_id: "Alice"}
    if pos <= w + l:
        return {contest_id: "Bob"}
    return {}


def main() -> None:
    sc = Scenario.contrived(900)
    contest, results, manifest = sc.to_election()
    inputs = {
        "contest": emit_contest(contest, dict(results.totals)),
        "manifest": emit_manifest(manifest),
        "subtotals": emit_subtotals(results.group_subtotals),
        "cvrs": emit_cvrs(results.linked_cvrs),
        "seed": SEED,
        "method": "alpha",
    }
    client = TestClient(app)
    opened = client.post("/sessions", json=inputs)
    assert opened.status_code == 201, opened.text
    snap = opened.json()
    sid = snap["session_id"]
    revision = snap["revision"]
    steps = []
    while snap["status"] == "RUNNING":
        drew = client.post(f"/sessions/{sid}/draws", json={"count": 1},
                           headers={"X-Expected-Revision": str(revision)})
        assert drew.status_code == 200, drew.text
        draw_payload = drew.json()
        revision = draw_payload["revision"]
        instruction = draw_payload["instructions"][0]
        votes = truth_votes(contest.id, results, instruction)
        rec = client.post(f"/sessions/{sid}/mvrs",
                          json={"ordinal": instruction["ordinal"], "votes": votes},
                          headers={"X-Expected-Revision": str(revision)})
        assert rec.status_code == 200, rec.text
        mvr_payload = rec.json()
        revision = mvr_payload["revision"]
        steps.append({"draw": draw_payload, "votes": votes, "mvr": mvr_payload})
        snap = client.get(f"/sessions/{sid}").json()
    transcript_text = client.get(f"/sessions/{sid}/transcript").text

    # prove the recorded transcript replays cleanly before freezing it
    replayed = eng.replay(contest, results, manifest,
                          parse_lines(transcript_text.splitlines()))
    assert replayed.status == "CONFIRMED"
    assert replayed.transcript.dumps() == transcript_text

    # a real conflict exchange for the race tests: stale revision on a
    # fresh session that drew one card
    second = client.post("/sessions", json=inputs).json()
    sid2 = second["session_id"]
    drew = client.post(f"/sessions/{sid2}/draws", json={"count": 1},
                       headers={"X-Expected-Revision": "0"}).json()
    ins = drew["instructions"][0]
    votes = truth_votes(contest.id, results, ins)
    ok = client.post(f"/sessions/{sid2}/mvrs",
                     json={"ordinal": ins["ordinal"], "votes": votes},
                     headers={"X-Expected-Revision": str(drew["revision"])})
    stale = client.post(f"/sessions/{sid2}/mvrs",
                        json={"ordinal": ins["ordinal"], "votes": votes},
                        headers={"X-Expected-Revision": str(drew["revision"])})
    assert ok.status_code == 200 and stale.status_code == 409
    undrawn = client.post(f"/sessions/{sid2}/mvrs",
                          json={"ordinal": 19_999, "votes": votes},
                          headers={"X-Expected-Revision":
                                   str(ok.json()["revision"])})
    assert undrawn.status_code == 422

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({
        "inputs": inputs,
        "open": opened.json(),
        "steps": steps,
        "final": snap,
        "transcript": transcript_text,
        "conflict_409": stale.json(),
        "domain_422": undrawn.json(),
    }, indent=1, sort_keys=True), encoding="utf-8")
    print(f"wrote {OUT} ({len(steps)} recorded entries, "
          f"{len(transcript_text.splitlines())} transcript events)")


if __name__ == "__main__":
    main()
