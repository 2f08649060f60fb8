"""Seed-reproducible card and batch selection.

The generator is bit-exact and language-independent: draw k is derived from
SHA-256(seed || "," || decimal counter), taking the first 8 bytes big-endian,
with rejection sampling to remove modulo bias.  The counter advances on every
hash evaluation, including rejected ones, so a transcript's (seed, counter)
pair pins the entire draw sequence for third-party verification.
"""

from __future__ import annotations

import bisect
import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .election import BallotManifest, LINKED
from .errors import AuditError

_WIDTH = 1 << 64


@dataclass
class DrawSequence:
    """Stateful draw stream; single writer, replayable from (seed, counter)."""

    seed: str
    counter: int = 0
    drawn: set[int] = field(default_factory=set)
    _remaining: list[int] | None = field(default=None, repr=False)

    def next_raw(self) -> int:
        """Next 64-bit hash value; advances the counter."""
        msg = f"{self.seed},{self.counter}".encode("ascii")
        self.counter += 1
        return int.from_bytes(hashlib.sha256(msg).digest()[:8], "big")

    def next_int(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n < 1:
            raise AuditError("EXHAUSTED", "no values to draw from")
        limit = _WIDTH - (_WIDTH % n)
        while True:
            v = self.next_raw()
            if v < limit:
                return v % n


def next_uniform(seq: DrawSequence, n_total: int) -> int:
    """Next undrawn ordinal in [1, n_total], uniform without replacement."""
    if seq._remaining is None:
        seq._remaining = [o for o in range(1, n_total + 1) if o not in seq.drawn]
    remaining = seq._remaining
    if not remaining:
        raise AuditError("EXHAUSTED", "every ordinal has been drawn", total=n_total)
    idx = seq.next_int(len(remaining))
    ordinal = remaining.pop(idx)
    seq.drawn.add(ordinal)
    return ordinal


def next_ppeb(seq: DrawSequence, error_bounds: Mapping[str, Fraction]) -> str:
    """Batch draw with probability proportional to error bound, with replacement.

    Shares the hash stream (and counter) with next_uniform.  Bounds are exact
    rationals; the draw inverts the cumulative bound at a uniform integer
    over a common denominator, so zero-bound batches are never selected.
    """
    items = sorted(error_bounds.items())
    weights = [Fraction(w) for _, w in items]
    if any(w < 0 for w in weights):
        raise AuditError("DOMAIN", "negative error bound")
    total = sum(weights, Fraction(0))
    if total == 0:
        raise AuditError("ALL_ZERO_BOUNDS", "every batch has a zero error bound")
    denom = math.lcm(*(w.denominator for w in weights))
    cum = []
    acc = 0
    for w in weights:
        acc += int(w * denom)
        cum.append(acc)
    r = seq.next_int(acc)
    idx = bisect.bisect_right(cum, r)
    return items[idx][0]


@dataclass(frozen=True)
class CardLocation:
    container_id: str
    position: int        # 1-based within the container
    group_id: str        # LINKED or reporting-group id
    linked_index: int    # 0-based index into the canonical CVR order, -1 if none


def locate(manifest: BallotManifest, ordinal: int) -> CardLocation:
    """Map an ordinal in [1, N] to (container, position, group).

    Containers are ordered lexicographically by id and ordinals assigned by
    cumulative card count; linked containers additionally index into the
    canonical (sorted-by-id) CVR order, concatenated across linked containers.
    """
    if ordinal < 1 or ordinal > manifest.total_cards:
        raise AuditError("OUT_OF_RANGE", "ordinal outside [1, N]",
                         ordinal=ordinal, total=manifest.total_cards)
    linked_before = 0
    offset = 0
    for entry in manifest.sorted_entries():
        if ordinal <= offset + entry.card_count:
            position = ordinal - offset
            if entry.group_id == LINKED:
                return CardLocation(entry.container_id, position, LINKED,
                                    linked_before + position - 1)
            return CardLocation(entry.container_id, position, entry.group_id, -1)
        offset += entry.card_count
        if entry.group_id == LINKED:
            linked_before += entry.card_count
    raise AuditError("OUT_OF_RANGE", "ordinal outside [1, N]", ordinal=ordinal)
