"""Bit-exact file formats for election inputs.

CSV for what election offices export (manifest, group subtotals), JSON lines
for per-card records, one JSON document for the contest header.  All files
are UTF-8 with LF line endings and a header row; emit(parse(x)) == x for
canonical files.  Diagnostics carry line (and column where it means
anything) so operators can fix exports without guesswork.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Iterable

from .election import (BallotManifest, CardRecord, Contest, GroupSubtotal,
                       ManifestEntry, ReportedResults)
from .errors import AuditError

MANIFEST_HEADER = ["container_id", "card_count", "group_id"]
SUBTOTALS_HEADER = ["group_id", "cards", "candidate", "count"]


def _rows(text: str, expected_header: list[str], what: str) -> list[tuple[int, list[str]]]:
    if text == "":
        raise AuditError("MISSING_HEADER", f"empty {what} file", expected=expected_header)
    reader = csv.reader(io.StringIO(text))
    rows = [(i + 1, row) for i, row in enumerate(reader) if row]
    if not rows or [c.strip() for c in rows[0][1]] != expected_header:
        raise AuditError("MISSING_HEADER", f"{what} must start with header "
                         f"{','.join(expected_header)}", expected=expected_header)
    return rows[1:]


def _int_field(value: str, line: int, col: int, what: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise AuditError("BAD_FIELD", f"line {line}, column {col}: {what} must be an integer",
                         line=line, column=col, value=value)


def parse_manifest(text: str) -> BallotManifest:
    entries = []
    seen = set()
    for line, row in _rows(text, MANIFEST_HEADER, "manifest"):
        if len(row) != 3:
            raise AuditError("BAD_FIELD", f"line {line}: expected 3 fields, got {len(row)}",
                             line=line, column=len(row))
        container, count, group = (c.strip() for c in row)
        if container in seen:
            raise AuditError("DUPLICATE_ID", f"line {line}: duplicate container {container}",
                             line=line, container=container)
        seen.add(container)
        entries.append(ManifestEntry(container, _int_field(count, line, 2, "card_count"),
                                     group))
    return BallotManifest(tuple(entries))


def emit_manifest(manifest: BallotManifest) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in manifest.entries:
        writer.writerow([e.container_id, e.card_count, e.group_id])
    return out.getvalue()


def parse_subtotals(text: str) -> tuple[GroupSubtotal, ...]:
    sizes: dict[str, int] = {}
    tallies: dict[str, dict[str, int]] = {}
    order: list[str] = []
    for line, row in _rows(text, SUBTOTALS_HEADER, "subtotals"):
        if len(row) != 4:
            raise AuditError("BAD_FIELD", f"line {line}: expected 4 fields, got {len(row)}",
                             line=line, column=len(row))
        group, cards, candidate, count = (c.strip() for c in row)
        cards_n = _int_field(cards, line, 2, "cards")
        if group in sizes and sizes[group] != cards_n:
            raise AuditError("BAD_FIELD", f"line {line}: group {group} card count "
                             f"disagrees with an earlier row", line=line, column=2)
        if group not in sizes:
            sizes[group] = cards_n
            tallies[group] = {}
            order.append(group)
        if candidate in tallies[group]:
            raise AuditError("DUPLICATE_ID", f"line {line}: duplicate candidate {candidate} "
                             f"in group {group}", line=line, candidate=candidate)
        tallies[group][candidate] = _int_field(count, line, 4, "count")
    return tuple(GroupSubtotal(g, sizes[g], tallies[g]) for g in order)


def emit_subtotals(subtotals: Iterable[GroupSubtotal]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUBTOTALS_HEADER)
    for g in subtotals:
        for candidate in sorted(g.tally):
            writer.writerow([g.group_id, g.cards, candidate, g.tally[candidate]])
    return out.getvalue()


def parse_cvrs(text: str) -> tuple[CardRecord, ...]:
    records = []
    seen = set()
    for line, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise AuditError("BAD_FIELD", f"line {line}: invalid JSON ({exc.msg})",
                             line=line, column=exc.colno)
        if not isinstance(obj, dict) or "card_id" not in obj:
            raise AuditError("BAD_FIELD", f"line {line}: record needs a card_id", line=line)
        card_id = str(obj["card_id"])
        if card_id in seen:
            raise AuditError("DUPLICATE_ID", f"line {line}: duplicate card {card_id}",
                             line=line, card=card_id)
        seen.add(card_id)
        votes = obj.get("votes", {})
        if not isinstance(votes, dict):
            raise AuditError("BAD_FIELD", f"line {line}: votes must be an object", line=line)
        records.append(CardRecord(card_id=card_id,
                                  votes={str(k): str(v) for k, v in votes.items()}))
    return tuple(records)


def emit_cvrs(records: Iterable[CardRecord]) -> str:
    lines = []
    for r in records:
        lines.append(json.dumps({"card_id": r.card_id,
                                 "votes": dict(sorted(r.votes.items()))},
                                sort_keys=True, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def parse_contest(text: str) -> tuple[Contest, dict[str, int]]:
    """Contest header JSON: identity, candidates, reported totals, risk limit
    (a fraction or decimal string, kept exact)."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AuditError("BAD_FIELD", f"contest file: invalid JSON ({exc.msg})",
                         line=exc.lineno, column=exc.colno)
    for key in ("id", "candidates", "reported_winner", "cards_total", "risk_limit",
                "reported_totals"):
        if key not in obj:
            raise AuditError("BAD_FIELD", f"contest file: missing {key}", field=key)
    contest = Contest(str(obj["id"]), tuple(str(c) for c in obj["candidates"]),
                      str(obj["reported_winner"]), int(obj["cards_total"]),
                      Fraction(str(obj["risk_limit"])))
    totals = {str(k): int(v) for k, v in obj["reported_totals"].items()}
    return contest, totals


def emit_contest(contest: Contest, totals: dict[str, int]) -> str:
    return json.dumps({
        "id": contest.id,
        "candidates": list(contest.candidates),
        "reported_winner": contest.reported_winner,
        "cards_total": contest.cards_total,
        "risk_limit": str(contest.risk_limit),
        "reported_totals": {k: int(v) for k, v in sorted(totals.items())},
    }, indent=2, sort_keys=True) + "\n"


def load_results(contest_text: str, cvrs_text: str,
                 subtotals_text: str) -> tuple[Contest, ReportedResults]:
    contest, totals = parse_contest(contest_text)
    cvrs = parse_cvrs(cvrs_text) if cvrs_text.strip() else ()
    subtotals = parse_subtotals(subtotals_text) if subtotals_text.strip() else ()
    return contest, ReportedResults(totals, cvrs, subtotals)
