"""Append-only, hash-chained session transcript.

One JSON object per line.  Each event carries a monotone sequence number and
the SHA-256 digest of the previous line's exact bytes, so any edit breaks the
chain.  Serialization is canonical (sorted keys, no whitespace) and contains
no wall-clock entropy: two runs from the same seed produce byte-identical
files.  Numbers whose exactness matters (risks, assorter values) travel as
decimal strings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Iterable, Iterator

from .errors import AuditError

GENESIS = "0" * 64

KINDS = ("OPEN", "DRAW", "MVR", "RISK", "STATUS")


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    kind: str
    payload: dict[str, Any]
    prev_digest: str

    def to_line(self) -> str:
        return json.dumps(
            {"seq": self.seq, "kind": self.kind, "payload": self.payload,
             "prev_digest": self.prev_digest},
            sort_keys=True, separators=(",", ":"))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_line().encode("utf-8")).hexdigest()


class Transcript:
    """In-memory event chain; persists as JSON lines with LF endings."""

    def __init__(self):
        self.events: list[TranscriptEvent] = []

    def append(self, kind: str, payload: dict[str, Any]) -> TranscriptEvent:
        if kind not in KINDS:
            raise AuditError("DOMAIN", "unknown event kind", kind=kind)
        prev = self.events[-1].digest if self.events else GENESIS
        ev = TranscriptEvent(len(self.events) + 1, kind, payload, prev)
        self.events.append(ev)
        return ev

    def dumps(self) -> str:
        return "".join(ev.to_line() + "\n" for ev in self.events)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    def __iter__(self) -> Iterator[TranscriptEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)


def parse_lines(lines: Iterable[str]) -> Transcript:
    """Parse and verify a transcript: sequence numbers strictly increasing
    from 1 and every digest link intact; CHAIN_BROKEN otherwise."""
    tr = Transcript()
    prev_digest = GENESIS
    for i, raw in enumerate(lines, start=1):
        raw = raw.rstrip("\n")
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise AuditError("CHAIN_BROKEN", f"line {i}: not valid JSON", line=i) from exc
        ev = TranscriptEvent(obj.get("seq"), obj.get("kind"), obj.get("payload"),
                             obj.get("prev_digest"))
        if ev.seq != i:
            raise AuditError("CHAIN_BROKEN", f"line {i}: sequence {ev.seq} out of order",
                             line=i)
        if ev.kind not in KINDS:
            raise AuditError("CHAIN_BROKEN", f"line {i}: unknown kind {ev.kind}", line=i)
        if ev.prev_digest != prev_digest:
            raise AuditError("CHAIN_BROKEN", f"line {i}: digest chain broken", line=i)
        if ev.to_line() != raw:
            # Canonical form is part of the contract; a re-encoded line would
            # change its digest and orphan every later event.
            raise AuditError("CHAIN_BROKEN", f"line {i}: non-canonical encoding", line=i)
        tr.events.append(ev)
        prev_digest = ev.digest
    return tr


def load(path) -> Transcript:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_lines(fh)
