"""HTTP facade over audit sessions for live data entry.

Sessions live in process memory; every mutation is serialized by a
per-session lock and bumps an integer revision.  Mutating requests must
carry the revision they built on in the X-Expected-Revision header; a stale
revision is rejected with 409 so two entry stations cannot double-record a
card.  Domain errors surface as 422 with the same JSON the CLI prints.
All risk and assorter numbers travel as decimal strings.
"""

from __future__ import annotations

import secrets
import threading
from typing import Optional

from fastapi import FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import engine as eng
from . import formats
from .election import CardRecord
from .errors import AuditError

app = FastAPI(title="onit audit service")


class _Held:
    def __init__(self, session: eng.AuditSession):
        self.session = session
        self.revision = 0
        self.lock = threading.Lock()


_sessions: dict[str, _Held] = {}
_registry_lock = threading.Lock()


class OpenSessionBody(BaseModel):
    contest: str                 # contest.json text
    manifest: str                # manifest.csv text
    subtotals: str = ""          # subtotals.csv text
    cvrs: str = ""               # cvrs.jsonl text
    seed: str
    method: str = "alpha"


class RecordBody(BaseModel):
    ordinal: int
    votes: dict[str, str]


class DrawBody(BaseModel):
    count: int = 1


@app.exception_handler(AuditError)
async def _audit_error(request: Request, exc: AuditError):
    status = 404 if exc.code == "UNKNOWN_SESSION" else 422
    return JSONResponse(status_code=status, content=exc.to_json())


def _get(session_id: str) -> _Held:
    held = _sessions.get(session_id)
    if held is None:
        raise AuditError("UNKNOWN_SESSION", "no such session", session=session_id)
    return held


def _snapshot(session_id: str, held: _Held) -> dict:
    s = held.session
    return {
        "session_id": session_id,
        "revision": held.revision,
        "status": s.status,
        "contest": s.contest.id,
        "candidates": list(s.contest.candidates),
        "reported_winner": s.contest.reported_winner,
        "risk_limit": str(s.risk_limit),
        "cards_total": s.contest.cards_total,
        "cards_recorded": len(s.recorded),
        "recorded": sorted(s.recorded),
        "pending": [ins.to_payload() for _, ins in sorted(s.pending.items())],
        "risks": {aid: repr(r) for aid, r in sorted(s.measured_risks().items())},
        "assertions": [a.id for a in s.assertions],
    }


def _check_revision(held: _Held, expected: Optional[str]) -> Optional[Response]:
    if expected is None or int(expected) != held.revision:
        return JSONResponse(status_code=409, content={
            "error": "REVISION_CONFLICT",
            "message": "session changed since you last read it",
            "details": {"current_revision": held.revision,
                        "expected": expected},
        })
    return None


@app.get("/healthz")
def healthz():
    return {"status": "ok"}


@app.post("/sessions", status_code=201)
def open_session(body: OpenSessionBody):
    contest, results = formats.load_results(body.contest, body.cvrs, body.subtotals)
    manifest = formats.parse_manifest(body.manifest)
    session = eng.open_session(contest, results, manifest, body.seed,
                               eng.MethodConfig(method=body.method))
    session_id = secrets.token_hex(8)
    with _registry_lock:
        _sessions[session_id] = _Held(session)
    return _snapshot(session_id, _sessions[session_id])


@app.get("/sessions/{session_id}")
def get_session(session_id: str):
    held = _get(session_id)
    with held.lock:
        return _snapshot(session_id, held)


@app.post("/sessions/{session_id}/draws")
def post_draws(session_id: str, body: DrawBody,
               x_expected_revision: Optional[str] = Header(default=None)):
    held = _get(session_id)
    with held.lock:
        conflict = _check_revision(held, x_expected_revision)
        if conflict:
            return conflict
        instructions = [eng.draw_next(held.session).to_payload()
                        for _ in range(body.count)]
        held.revision += 1
        return {"instructions": instructions,
                "revision": held.revision,
                "status": held.session.status}


@app.post("/sessions/{session_id}/mvrs")
def post_mvr(session_id: str, body: RecordBody,
             x_expected_revision: Optional[str] = Header(default=None)):
    held = _get(session_id)
    with held.lock:
        conflict = _check_revision(held, x_expected_revision)
        if conflict:
            return conflict
        mvr = CardRecord(f"mvr-{body.ordinal}", dict(body.votes))
        updates = eng.record_mvr(held.session, body.ordinal, mvr)
        held.revision += 1
        return {
            "revision": held.revision,
            "status": held.session.status,
            "assertions": [{"assertion": aid, "comparison_value": str(x),
                            "measured_risk": repr(r)} for aid, x, r in updates],
        }


@app.get("/sessions/{session_id}/transcript")
def get_transcript(session_id: str):
    held = _get(session_id)
    with held.lock:
        return PlainTextResponse(held.session.transcript.dumps(),
                                 media_type="application/jsonl")
