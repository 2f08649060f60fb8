from __future__ import annotations

import hashlib
from fractions import Fraction

import numpy as np
import pytest

from onit.election import BallotManifest, LINKED, ManifestEntry
from onit.errors import AuditError
from onit.sampling import DrawSequence, locate, next_ppeb, next_uniform


def _oracle_stream(seed: str, count: int, n: int):
    """Independent reimplementation of the draw rule, used to freeze goldens:
    first 8 bytes of SHA-256(seed ',' counter), big-endian, rejection-sampled."""
    counter = 0
    out = []
    width = 1 << 64
    limit = width - width % n
    for _ in range(count):
        while True:
            digest = hashlib.sha256(f"{seed},{counter}".encode()).digest()
            counter += 1
            v = int.from_bytes(digest[:8], "big")
            if v < limit:
                break
        out.append(v % n)
    return out


def test_first_draws_match_independent_oracle():
    # without-replacement draws over N=20,000; oracle maps indexes into the
    # shrinking remaining list exactly as the sampler specifies
    seq = DrawSequence("20230319")
    n = 20_000
    remaining = list(range(1, n + 1))
    expected = []
    counter = 0
    width = 1 << 64
    for _ in range(5):
        m = len(remaining)
        limit = width - width % m
        while True:
            digest = hashlib.sha256(f"20230319,{counter}".encode()).digest()
            counter += 1
            v = int.from_bytes(digest[:8], "big")
            if v < limit:
                break
        expected.append(remaining.pop(v % m))
    got = [next_uniform(seq, n) for _ in range(5)]
    assert got == expected
    # frozen golden values for the published seed (computed by the oracle above)
    assert got == [18348, 4573, 7596, 7829, 9477]


def test_single_remaining_is_forced():
    seq = DrawSequence("s")
    drawn = {next_uniform(seq, 3) for _ in range(2)}
    last = next_uniform(seq, 3)
    assert {last} == {1, 2, 3} - drawn


def test_exhaustion():
    seq = DrawSequence("s")
    for _ in range(4):
        next_uniform(seq, 4)
    with pytest.raises(AuditError) as err:
        next_uniform(seq, 4)
    assert err.value.code == "EXHAUSTED"


def test_without_replacement_enumerates_everything():
    seq = DrawSequence("walk")
    n = 257
    assert sorted(next_uniform(seq, n) for _ in range(n)) == list(range(1, n + 1))


def test_determinism_same_seed_same_sequence():
    a = DrawSequence("alpha seed")
    b = DrawSequence("alpha seed")
    for _ in range(50):
        assert next_uniform(a, 1000) == next_uniform(b, 1000)
    assert a.counter == b.counter


def test_uniformity_chi_squared():
    # raw generator into 100 bins over 1e5 draws; reject only below p=0.001
    seq = DrawSequence("uniformity")
    bins = np.zeros(100)
    for _ in range(100_000):
        bins[seq.next_int(100)] += 1
    expected = 1000.0
    chi2 = float(((bins - expected) ** 2 / expected).sum())
    # 99 dof: critical value at p=0.001 is 148.23
    assert chi2 < 148.23


MANIFEST = BallotManifest((
    ManifestEntry("container-linked", 10_000, LINKED),
    *[ManifestEntry(f"precinct-{i:02d}", 1000, f"precinct-{i:02d}")
      for i in range(1, 11)],
))


def test_locate_layout():
    # containers sort lexicographically: container-linked precedes precinct-*
    first = locate(MANIFEST, 1)
    assert (first.container_id, first.position, first.group_id) == \
        ("container-linked", 1, LINKED)
    assert first.linked_index == 0
    boundary = locate(MANIFEST, 10_001)
    assert (boundary.container_id, boundary.position) == ("precinct-01", 1)
    last = locate(MANIFEST, 20_000)
    assert (last.container_id, last.position) == ("precinct-10", 1000)


def test_locate_out_of_range():
    for bad in (0, 20_001):
        with pytest.raises(AuditError) as err:
            locate(MANIFEST, bad)
        assert err.value.code == "OUT_OF_RANGE"


def test_ppeb_single_and_zero():
    seq = DrawSequence("ppeb")
    assert next_ppeb(seq, {"only": Fraction(3, 2)}) == "only"
    for _ in range(200):
        assert next_ppeb(seq, {"a": Fraction(1), "z": Fraction(0)}) == "a"
    with pytest.raises(AuditError) as err:
        next_ppeb(seq, {"a": Fraction(0)})
    assert err.value.code == "ALL_ZERO_BOUNDS"


def test_ppeb_ratio():
    seq = DrawSequence("ppeb-ratio")
    counts = {"heavy": 0, "light": 0}
    n = 100_000
    for _ in range(n):
        counts[next_ppeb(seq, {"heavy": Fraction(3), "light": Fraction(1)})] += 1
    p = counts["heavy"] / n
    se = (0.75 * 0.25 / n) ** 0.5
    assert abs(p - 0.75) < 5 * se


def test_ppeb_shares_counter_with_uniform():
    seq = DrawSequence("shared")
    next_uniform(seq, 10)
    c1 = seq.counter
    next_ppeb(seq, {"a": Fraction(1), "b": Fraction(1)})
    assert seq.counter > c1
