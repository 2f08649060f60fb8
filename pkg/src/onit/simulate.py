"""Monte Carlo harness: expected workloads, permutation studies, method grids.

All heavy paths are vectorized over numpy arrays; each replication owns an
independent generator seeded from SHA-256(base seed, rep index), so results
are reproducible run to run and replications are embarrassingly parallel in
principle.  The per-draw arithmetic matches risk.alpha_update exactly (same
expressions, same clamps); a unit test holds the two paths together.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .assorters import affine_recover
from .election import (BallotManifest, CardRecord, Contest, GroupSubtotal,
                       LINKED, ManifestEntry, NO_VOTE, ReportedResults)
from .errors import AuditError
from .risk import ETA_CAP, AlphaConfig, fixed_bet_eta

#: Error-bound inflator of the classic card-level comparison sample-size rule.
SUPER_SIMPLE_GAMMA = 1.03905

WINNER = "Alice"
LOSER = "Bob"


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class GroupBlock:
    """A family of identical reporting groups."""

    n_groups: int
    cards: int              # per group
    winner_votes: int       # per group
    loser_votes: int        # per group

    @property
    def other(self) -> int:
        return self.cards - self.winner_votes - self.loser_votes


@dataclass(frozen=True)
class Scenario:
    """Synthetic two-candidate election for workload experiments.

    The reported data are linked CVRs for one block of cards plus per-group
    subtotals for the rest.  The true hand reads default to agreeing with the
    reported data; ``true_linked``/``true_groups`` override them (same shapes)
    for wrong-outcome experiments.
    """

    name: str
    linked: tuple[int, int, int]                  # winner, loser, other counts
    groups: tuple[GroupBlock, ...] = ()
    risk_limit: Fraction = Fraction(1, 20)
    true_linked: Optional[tuple[int, int, int]] = None
    true_groups: Optional[tuple[GroupBlock, ...]] = None

    @property
    def cards_total(self) -> int:
        return sum(self.linked) + sum(b.n_groups * b.cards for b in self.groups)

    @property
    def reported_totals(self) -> dict[str, int]:
        w = self.linked[0] + sum(b.n_groups * b.winner_votes for b in self.groups)
        l = self.linked[1] + sum(b.n_groups * b.loser_votes for b in self.groups)
        return {WINNER: w, LOSER: l}

    def margin(self) -> Fraction:
        totals = self.reported_totals
        n = self.cards_total
        mean = Fraction(2 * totals[WINNER] + (n - totals[WINNER] - totals[LOSER]), 2 * n)
        return 2 * mean - 1

    # -- fixtures ----------------------------------------------------------

    def to_election(self) -> tuple[Contest, ReportedResults, BallotManifest]:
        """Materialize contest, reported results (with per-card CVRs) and a
        manifest with one container per reporting group plus one linked
        container, containers ordered so ordinals follow the linked block."""
        contest = Contest("contest-1", (WINNER, LOSER), WINNER,
                          self.cards_total, self.risk_limit)
        cvrs = []
        w, l, o = self.linked
        for i in range(w + l + o):
            vote = WINNER if i < w else (LOSER if i < w + l else NO_VOTE)
            votes = {contest.id: vote} if vote != NO_VOTE else {}
            cvrs.append(CardRecord(card_id=f"cvr-{i + 1:06d}", votes=votes))
        entries = []
        if w + l + o:
            entries.append(ManifestEntry("container-linked", w + l + o, LINKED))
        subtotals = []
        gidx = 0
        for block in self.groups:
            for _ in range(block.n_groups):
                gidx += 1
                gid = f"precinct-{gidx:02d}"
                entries.append(ManifestEntry(gid, block.cards, gid))
                subtotals.append(GroupSubtotal(gid, block.cards, {
                    WINNER: block.winner_votes, LOSER: block.loser_votes}))
        results = ReportedResults(self.reported_totals, tuple(cvrs), tuple(subtotals))
        return contest, results, BallotManifest(tuple(entries))

    # -- canonical scenarios -------------------------------------------------

    @staticmethod
    def contrived(polarization: int) -> "Scenario":
        """20,000 cards: 10,000 linked (5,000/4,000/1,000) plus ten precincts
        of 1,000, half voting ``polarization``/rest for the winner and half
        the mirror image; 5% margin overall."""
        p = polarization
        return Scenario(
            name=f"contrived-{p}",
            linked=(5000, 4000, 1000),
            groups=(GroupBlock(5, 1000, p, 1000 - p),
                    GroupBlock(5, 1000, 1000 - p, p)),
        )

    @staticmethod
    def pure_clca() -> "Scenario":
        """Every card has a linked CVR; same totals as the contrived setup."""
        return Scenario(name="pure-clca", linked=(10000, 9000, 1000))

    @staticmethod
    def from_theta(theta: float, blank_frac: float, n: int) -> "Scenario":
        """Grid-mode population: winner share theta of valid votes, a given
        fraction of blank cards, everything in one contest-wide group."""
        if not (0.5 < theta < 1):
            raise AuditError("DOMAIN", "theta must lie in (1/2, 1)", theta=theta)
        blanks = round(n * blank_frac)
        valid = n - blanks
        w = round(valid * theta)
        return Scenario(name=f"theta-{theta}-blank-{blank_frac}-{n}",
                        linked=(0, 0, 0),
                        groups=(GroupBlock(1, n, w, valid - w),))


# ---------------------------------------------------------------------------
# vectorized trajectories (mirrors risk.alpha_update / risk.sprt_update)


def alpha_log_trajectory(x: np.ndarray, n_pop: int, upper: float,
                         cfg: AlphaConfig) -> np.ndarray:
    """Cumulative log martingale along one draw stream, without replacement.

    Same per-draw expressions and clamps as risk.alpha_update, evaluated for
    the whole stream at once.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    s = np.concatenate(([0.0], np.cumsum(x)))[:-1]
    j = np.arange(1, n + 1, dtype=float)
    mu = (n_pop / 2 - s) / (n_pop - j + 1)
    cap = upper * ETA_CAP
    if cfg.estimator == "fixed":
        eta = np.minimum(np.maximum(cfg.eta0, mu), cap)
    else:
        j1 = cfg.d + j - 1
        eta = (cfg.d * cfg.eta0 + s) / j1
        eta = np.maximum(eta, mu + cfg.c / np.sqrt(j1))
        eta = np.minimum(eta, cap)
        eta = np.maximum(eta, mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (x / mu) * (eta - mu) / (upper - mu) + (upper - eta) / (upper - mu)
    terms = np.where(mu >= upper, 1.0, terms)
    terms = np.where(np.isclose(mu, upper, rtol=1e-9, atol=1e-12), 1.0, terms)
    terms = np.where(np.isclose(mu, 0.0, atol=1e-15), 1.0, terms)
    terms = np.where(mu < 0, np.inf, terms)
    with np.errstate(divide="ignore"):
        log_terms = np.log(terms)
    out = np.cumsum(log_terms)
    # a running sum above the null total rules the null out from that draw on
    certain = np.nonzero(s + x > n_pop / 2)[0]
    if certain.size:
        out[certain[0]:] = np.inf
    return out


def first_crossing(log_t: np.ndarray, alpha: float) -> Optional[int]:
    """1-based index of the first draw at which measured risk <= alpha."""
    hits = np.nonzero(log_t >= math.log(1 / alpha))[0]
    return int(hits[0]) + 1 if hits.size else None


def sprt_log_trajectory(x: np.ndarray, theta: float) -> np.ndarray:
    lw = math.log(2 * theta)
    ll = math.log(2 * (1 - theta))
    steps = np.where(x == 1.0, lw, np.where(x == 0.0, ll, 0.0))
    return np.cumsum(steps)


def _rep_rng(seed: str, rep: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{rep}".encode("ascii")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


# ---------------------------------------------------------------------------
# per-method populations and stopping rules


def comparison_population(sc: Scenario) -> tuple[np.ndarray, float, float]:
    """True-card comparison-assorter values, their upper bound, and the
    contest margin, under the scenario's (possibly overridden) truth."""
    v = float(sc.margin())
    if v <= 0:
        raise AuditError("NONPOSITIVE_MARGIN", "scenario has no reported margin")
    u = 1.0
    upper = 2 * u / (2 * u - v)
    vals: list[float] = []
    true_linked = sc.true_linked or sc.linked
    # Linked cards: reported CVR vs true read, matched rank-by-rank within the
    # block (winners first); disagreements show up when the truth overrides.
    rw, rl, ro = sc.linked
    tw, tl, to = true_linked
    if (rw + rl + ro) != (tw + tl + to):
        raise AuditError("LENGTH_MISMATCH", "true linked block differs in size")
    reported_seq = [1.0] * rw + [0.0] * rl + [0.5] * ro
    true_seq = [1.0] * tw + [0.0] * tl + [0.5] * to
    for a_cvr, a_mvr in zip(reported_seq, true_seq):
        vals.append((u + a_mvr - a_cvr) / (2 * u - v))
    true_groups = sc.true_groups or sc.groups
    if len(true_groups) != len(sc.groups):
        raise AuditError("LENGTH_MISMATCH", "true group blocks differ in shape")
    for rep_block, true_block in zip(sc.groups, true_groups):
        if (rep_block.n_groups, rep_block.cards) != (true_block.n_groups, true_block.cards):
            raise AuditError("LENGTH_MISMATCH", "true group blocks differ in shape")
        mean = (rep_block.winner_votes + 0.5 * rep_block.other) / rep_block.cards
        per_group = ([ (u + 1.0 - mean) / (2 * u - v) ] * true_block.winner_votes
                     + [ (u + 0.0 - mean) / (2 * u - v) ] * true_block.loser_votes
                     + [ (u + 0.5 - mean) / (2 * u - v) ] * true_block.other)
        vals.extend(per_group * rep_block.n_groups)
    return np.array(vals), upper, v


def polling_population(sc: Scenario) -> np.ndarray:
    """True-card raw assorter values."""
    tw, tl, to = sc.true_linked or sc.linked
    vals = [1.0] * tw + [0.0] * tl + [0.5] * to
    for block in (sc.true_groups or sc.groups):
        vals.extend(([1.0] * block.winner_votes + [0.0] * block.loser_votes
                     + [0.5] * block.other) * block.n_groups)
    return np.array(vals)


@dataclass(frozen=True)
class SampleSizeStats:
    method: str
    scenario: str
    mean: float
    sd: float
    quantiles: dict[str, float]
    reps: int
    confirmed: int          # replications that stopped before a full count
    notes: dict[str, str] = field(default_factory=dict)


def _summarize(method: str, scenario: str, sizes: np.ndarray, confirmed: int,
               notes: dict[str, str] | None = None) -> SampleSizeStats:
    qs = {q: float(np.percentile(sizes, int(q))) for q in ("25", "50", "75", "90")}
    return SampleSizeStats(method, scenario, float(sizes.mean()), float(sizes.std()),
                           qs, len(sizes), confirmed, notes or {})


def run_expected_sample_size(scenario: Scenario, method: str, alpha: float = 0.05,
                             reps: int = 200, seed: str = "sim",
                             eta0_frac: float = 0.99, d: int = 600, c: float = 0.5,
                             estimator: str = "shrink_trunc",
                             theta: float | None = None) -> SampleSizeStats:
    """Simulate full audits over shuffled true-card orderings and report
    stopping-size statistics.  Runs that never confirm count as the full
    population (noted in the output metadata).

    Methods: one_clca (comparison against the ONE layout), bpa (polling
    SPRT), clca (every card linked, classic comparison rule), km_blca
    (batch comparison, Kaplan-Markov over PPEB draws, workload counted in
    cards tabulated).  The estimator knobs apply to one_clca only; eta0_frac
    positions the initial alternative as a fraction of the comparison bound.
    """
    if reps < 100:
        raise AuditError("DOMAIN", "at least 100 replications required", reps=reps)
    notes = {"stopped_at_n_counts_full_population": "true", "initial_martingale": "1"}
    if method == "one_clca":
        pop, upper, _ = comparison_population(scenario)
        n = len(pop)
        cfg = AlphaConfig(eta0=eta0_frac * upper, estimator=estimator, d=d, c=c)
        sizes, confirmed = [], 0
        for rep in range(reps):
            x = _rep_rng(seed, rep).permutation(pop)
            stop = first_crossing(alpha_log_trajectory(x, n, upper, cfg), alpha)
            confirmed += stop is not None
            sizes.append(stop if stop is not None else n)
        return _summarize(method, scenario.name, np.array(sizes), confirmed, notes)
    if method == "bpa":
        pop = polling_population(scenario)
        n = len(pop)
        totals = scenario.reported_totals
        th = theta if theta is not None else totals[WINNER] / (totals[WINNER] + totals[LOSER])
        if th <= 0.5:
            raise AuditError("DOMAIN", "SPRT alternative must exceed 1/2", theta=th)
        sizes, confirmed = [], 0
        for rep in range(reps):
            x = _rep_rng(seed, rep).permutation(pop)
            stop = first_crossing(sprt_log_trajectory(x, th), alpha)
            confirmed += stop is not None
            sizes.append(stop if stop is not None else n)
        return _summarize(method, scenario.name, np.array(sizes), confirmed, notes)
    if method == "clca":
        return _run_clca(scenario, alpha, reps, seed, notes)
    if method == "km_blca":
        return _run_km_blca(scenario, alpha, reps, seed, notes)
    raise AuditError("DOMAIN", "unknown method", method=method)


def _run_clca(scenario: Scenario, alpha: float, reps: int, seed: str,
              notes: dict[str, str]) -> SampleSizeStats:
    """Classic card-level comparison with linked CVRs for every card:
    uniform draws, each error-free draw shrinks the P-value by
    (1 - margin/(2*gamma))."""
    v = float(scenario.margin())
    # Per-card overstatements in votes under the scenario truth (0 if agreeing).
    rw, rl, ro = scenario.linked
    tw, tl, to = scenario.true_linked or scenario.linked
    rep_seq = np.array([1.0] * rw + [0.0] * rl + [0.5] * ro)
    true_seq = np.array([1.0] * tw + [0.0] * tl + [0.5] * to)
    if scenario.groups:
        raise AuditError("DOMAIN", "clca method requires every card linked")
    over = 2 * (rep_seq - true_seq)       # in votes, within {-2,...,2}
    taints = over / (2 * SUPER_SIMPLE_GAMMA)
    base = math.log(1 - v / (2 * SUPER_SIMPLE_GAMMA))
    n = len(over)
    sizes, confirmed = [], 0
    for rep in range(reps):
        t = _rep_rng(seed, rep).permutation(taints)
        log_p = np.cumsum(base - np.log(1 - t))
        hits = np.nonzero(log_p <= math.log(alpha))[0]
        stop = int(hits[0]) + 1 if hits.size else None
        confirmed += stop is not None
        sizes.append(stop if stop is not None else n)
    return _summarize("clca", scenario.name, np.array(sizes), confirmed, notes)


@dataclass(frozen=True)
class _Batch:
    cards: int
    rep_margin: int        # reported winner minus loser votes
    true_margin: int

    def bound(self, v_votes: int) -> float:
        return (self.rep_margin + self.cards) / v_votes

    def taint(self, v_votes: int) -> float:
        if self.bound(v_votes) == 0:
            return 0.0
        e = (self.rep_margin - self.true_margin) / v_votes
        return e / self.bound(v_votes)


def _blca_batches(sc: Scenario) -> tuple[list[_Batch], int]:
    """Batch structure for batch-level comparison: one singleton batch per
    linked card, one batch per reporting group."""
    rw, rl, ro = sc.linked
    tw, tl, to = sc.true_linked or sc.linked
    if (rw + rl + ro) != (tw + tl + to):
        raise AuditError("LENGTH_MISMATCH", "true linked block differs in size")
    batches = []
    rep_seq = [1] * rw + [0] * rl + [2] * ro      # 2 marks a no-vote card
    true_seq = [1] * tw + [0] * tl + [2] * to
    for r, t in zip(rep_seq, true_seq):
        rm = 1 if r == 1 else (-1 if r == 0 else 0)
        tm = 1 if t == 1 else (-1 if t == 0 else 0)
        batches.append(_Batch(1, rm, tm))
    true_groups = sc.true_groups or sc.groups
    for rep_block, true_block in zip(sc.groups, true_groups):
        for _ in range(rep_block.n_groups):
            batches.append(_Batch(rep_block.cards,
                                  rep_block.winner_votes - rep_block.loser_votes,
                                  true_block.winner_votes - true_block.loser_votes))
    totals = sc.reported_totals
    v_votes = totals[WINNER] - totals[LOSER]
    if v_votes <= 0:
        raise AuditError("NONPOSITIVE_MARGIN", "no reported margin")
    return batches, v_votes


def _run_km_blca(scenario: Scenario, alpha: float, reps: int, seed: str,
                 notes: dict[str, str]) -> SampleSizeStats:
    """Kaplan-Markov batch comparison: batches drawn with probability
    proportional to error bound, with replacement; workload is the number of
    cards in distinct audited batches (a batch is tabulated once)."""
    batches, v_votes = _blca_batches(scenario)
    bounds = np.array([b.bound(v_votes) for b in batches])
    cards = np.array([b.cards for b in batches])
    taints = np.array([b.taint(v_votes) for b in batches])
    total = bounds.sum()
    if total <= 1:
        raise AuditError("DOMAIN", "total error bound must exceed 1", U=total)
    probs = bounds / total
    base = math.log(1 - 1 / total)
    log_alpha = math.log(alpha)
    max_draws = 50 * int(math.ceil(-total * math.log(alpha))) + len(batches)
    sizes, confirmed = [], 0
    notes = dict(notes, total_error_bound=repr(float(total)))
    for rep in range(reps):
        rng = _rep_rng(seed, rep)
        draws = rng.choice(len(batches), size=max_draws, replace=True, p=probs)
        t = taints[draws]
        with np.errstate(divide="ignore"):
            steps = base - np.log(1 - t)          # taint 1 -> +inf: cannot conclude
        log_p = np.cumsum(steps)                  # reported P is min(1, exp(.))
        hits = np.nonzero(log_p <= log_alpha)[0]
        if hits.size:
            confirmed += 1
            audited = np.unique(draws[: int(hits[0]) + 1])
        else:
            audited = np.arange(len(batches))      # escalated to everything
        sizes.append(int(cards[audited].sum()))
    return _summarize("km_blca", scenario.name, np.array(sizes), confirmed, notes)


# ---------------------------------------------------------------------------
# 2018 Kalamazoo pilot replication

#: Reported votes by stratum and the hand reads of the 32-card polling sample
#: from the 2018 pilot audit in Kalamazoo, MI (gubernatorial primary).
KALAMAZOO = {
    "cvr_stratum": {
        "Butkovich": 6, "Gelineau": 56, "Kurland": 23, "Schleiger": 19,
        "Schuette": 1349, "Whitmer": 3765, "": 76,
    },
    "nocvr_stratum": {
        "Butkovich": 66, "Gelineau": 462, "Kurland": 284, "Schleiger": 116,
        "Schuette": 4220, "Whitmer": 16934, "": 290,
    },
    "polling_sample": {"Whitmer": 23, "Schuette": 8, "Gelineau": 1},
    "clean_cvr_draws": 8,
    "winner": "Whitmer",
    "runner_up": "Schuette",
}


@dataclass(frozen=True)
class KalamazooResult:
    mean_p: float
    sd_p: float
    q90_p: float
    permutations: int
    margin: str
    comparison_upper: str
    clean_cvr_value: str
    notes: dict[str, str]


def run_kalamazoo(permutations: int = 10_000, seed: str = "kalamazoo") -> KalamazooResult:
    """Permutation study of the pilot's pooled sample.

    Cards without linked CVRs are compared against one synthetic record equal
    to their stratum's mean assorter value; the winner/runner-up margin comes
    from the combined reported totals.  The supermartingale uses the fixed
    bet 0.99 * (comparison upper bound), expressed as its equivalent fixed
    alternative, and conditions on sampling without replacement from all
    cards.  The measured risk of each permutation of the 32 hand-read cards
    is aggregated; the 8 error-free draws from the CVR stratum each sit at
    the reported-correct comparison value and are reported alongside.

    The pilot's sample was stratified; treating it as a simple random sample
    is an illustration, flagged in the notes rather than resolved.
    """
    if permutations < 1:
        raise AuditError("DOMAIN", "at least one permutation required")
    cvr = KALAMAZOO["cvr_stratum"]
    nocvr = KALAMAZOO["nocvr_stratum"]
    w, r = KALAMAZOO["winner"], KALAMAZOO["runner_up"]
    n_total = sum(cvr.values()) + sum(nocvr.values())
    w_total = cvr[w] + nocvr[w]
    r_total = cvr[r] + nocvr[r]
    other = n_total - w_total - r_total
    mean = Fraction(2 * w_total + other, 2 * n_total)
    v = 2 * mean - 1
    u = 1.0
    upper = 2 * u / (2 * u - float(v))
    n_nocvr = sum(nocvr.values())
    strat_other = n_nocvr - nocvr[w] - nocvr[r]
    one_value = Fraction(2 * nocvr[w] + strat_other, 2 * n_nocvr)

    def b_of(assort_value: float) -> float:
        return (u + assort_value - float(one_value)) / (2 * u - float(v))

    sample = KALAMAZOO["polling_sample"]
    stream = np.array([b_of(1.0)] * sample["Whitmer"]
                      + [b_of(0.0)] * sample["Schuette"]
                      + [b_of(0.5)] * sample["Gelineau"])
    eta = fixed_bet_eta(0.99 * upper, upper)
    cfg = AlphaConfig(eta0=eta, estimator="fixed")
    rng = _rep_rng(seed, 0)
    ps = np.empty(permutations)
    for i in range(permutations):
        x = rng.permutation(stream)
        log_t = alpha_log_trajectory(x, n_total, upper, cfg)
        ps[i] = min(1.0, math.exp(-float(log_t.max())))
    clean_value = u / (2 * u - float(v))
    return KalamazooResult(
        mean_p=float(ps.mean()), sd_p=float(ps.std()),
        q90_p=float(np.percentile(ps, 90)), permutations=permutations,
        margin=str(v), comparison_upper=repr(upper),
        clean_cvr_value=repr(clean_value),
        notes={
            "stratified_sample_treated_as_srs": "true",
            "clean_cvr_draws": str(KALAMAZOO["clean_cvr_draws"]),
            "fixed_bet": repr(0.99 * upper),
        })


# ---------------------------------------------------------------------------
# method grid (polling-style populations, raw vs comparison-transformed)


@dataclass(frozen=True)
class GridConfig:
    """One row family of the method grid."""

    family: str            # "alpha_raw" or "alpha_one"
    eta: float             # alternative as a winner share of all cards
    d: Optional[int]       # shrinkage weight; None means a fixed alternative
    c: float = 0.5

    @property
    def label(self) -> str:
        dd = "inf" if self.d is None else str(self.d)
        return f"{self.family} eta={self.eta} d={dd}"


@dataclass(frozen=True)
class GridCell:
    theta: float
    blank_frac: float
    n: int
    config: str
    mean_size: float
    sd_size: float
    reps: int


def _grid_stream(sc: Scenario, config: GridConfig) -> tuple[np.ndarray, float, float]:
    """Population, upper bound and initial alternative for one grid config.

    alpha_raw tests the raw assorter values.  alpha_one pushes every card
    through the comparison transform against the contest-wide synthetic
    record and then applies the affine rescaling that restores the support
    endpoints (null mean back at 1/2); the alternative maps through the same
    two steps, so the pair of rows measures the transform round trip rather
    than a change of test.
    """
    raw = polling_population(sc)
    if config.family == "alpha_raw":
        return raw, 1.0, config.eta
    if config.family != "alpha_one":
        raise AuditError("DOMAIN", "unknown grid family", family=config.family)
    v = sc.margin()
    abar = (v + 1) / 2
    u = Fraction(1)
    mapping = {}
    for a in (Fraction(0), Fraction(1, 2), Fraction(1)):
        b_val = (u + a - abar) / (2 * u - v)
        mapping[float(a)] = float(affine_recover(b_val, v))
    stream = np.array([mapping[x] for x in raw])
    eta_b = (u + Fraction(str(config.eta)) - abar) / (2 * u - v)
    return stream, 1.0, float(affine_recover(eta_b, v))


def run_grid(thetas: Sequence[float], blank_fracs: Sequence[float],
             ns: Sequence[int], configs: Sequence[GridConfig],
             reps: int = 1000, alpha: float = 0.05,
             seed: str = "grid") -> list[GridCell]:
    """Mean stopping sizes over shuffled populations for every condition and
    config; conditions with a null that never rejects count the full
    population."""
    cells = []
    for theta in thetas:
        for blank in blank_fracs:
            for n in ns:
                sc = Scenario.from_theta(theta, blank, n)
                for config in configs:
                    stream, upper, eta0 = _grid_stream(sc, config)
                    if config.d is None:
                        cfg = AlphaConfig(eta0=eta0, estimator="fixed")
                    else:
                        cfg = AlphaConfig(eta0=eta0, estimator="shrink_trunc",
                                          d=config.d, c=config.c)
                    sizes = np.empty(reps)
                    tag = f"{seed}:{config.label}:{theta}:{blank}:{n}"
                    for rep in range(reps):
                        x = _rep_rng(tag, rep).permutation(stream)
                        stop = first_crossing(alpha_log_trajectory(x, n, upper, cfg),
                                              alpha)
                        sizes[rep] = stop if stop is not None else n
                    cells.append(GridCell(theta, blank, n, config.label,
                                          float(sizes.mean()), float(sizes.std()),
                                          reps))
    return cells


def score_geometric_mean(cells: Sequence[GridCell]) -> dict[str, float]:
    """Geometric mean, per config, of the ratio of its mean stopping size to
    the smallest mean stopping size for each (theta, blank, N) condition."""
    conditions: dict[tuple, dict[str, float]] = {}
    for cell in cells:
        conditions.setdefault((cell.theta, cell.blank_frac, cell.n), {})[cell.config] \
            = cell.mean_size
    configs = sorted({cell.config for cell in cells})
    for cond, per in conditions.items():
        for config in configs:
            if config not in per:
                raise AuditError("MISSING_CELL", "config missing from condition",
                                 config=config, condition=str(cond))
    scores = {}
    for config in configs:
        log_sum = 0.0
        for per in conditions.values():
            best = min(per.values())
            log_sum += math.log(per[config] / best)
        scores[config] = math.exp(log_sum / len(conditions))
    return scores


# ---------------------------------------------------------------------------
# planning and soundness paths


def plan_stopping_sizes(session, error_rate: float = 0.0, reps: int = 200,
                        seed: str = "plan") -> list[int]:
    """Stopping sizes for simulated audits of an open session, assuming hand
    reads match the reported data except that ``error_rate`` of the winner's
    cards read as votes for the loser."""
    contest = session.contest
    n = contest.cards_total
    sizes: list[int] = []
    if session.config.method == "sprt":
        base, alt = _session_polling_stream(session)
        theta = session.risk[session.assertions[0].id].theta
        for rep in range(reps):
            rng = _rep_rng(seed, rep)
            x = _apply_errors(rng, base.copy(), alt, error_rate)
            stop = first_crossing(sprt_log_trajectory(rng.permutation(x), theta),
                                  float(contest.risk_limit))
            sizes.append(stop if stop is not None else n)
        return sizes
    # comparison audit: streams per assertion; stop when the last assertion passes
    streams = {}
    for a in session.assertions:
        base, alt = _session_comparison_stream(session, a)
        streams[a.id] = (base, alt, float(_comparison_upper(a)), session.risk[a.id].alpha_cfg)
    for rep in range(reps):
        rng = _rep_rng(seed, rep)
        order = rng.permutation(n)
        flips = rng.random(n) < error_rate if error_rate > 0 else None
        worst = 0
        for a in session.assertions:
            base, alt, upper, cfg = streams[a.id]
            x = np.where(flips, alt, base)[order] if flips is not None else base[order]
            stop = first_crossing(alpha_log_trajectory(x, n, upper, cfg),
                                  float(contest.risk_limit))
            worst = max(worst, stop if stop is not None else n)
        sizes.append(worst)
    return sizes


def _comparison_upper(assertion) -> Fraction:
    u, v = assertion.assorter.upper, assertion.margin
    return 2 * u / (2 * u - v)


def _session_comparison_stream(session, assertion):
    """Per-ordinal comparison values when hand reads match reported data, and
    the value each card would take if its read flipped to the loser."""
    from .assorters import OverstatementAssorter, assort, overstatement_value
    from .sampling import locate
    b = OverstatementAssorter(assertion)
    layout = session.layouts[assertion.id]
    n = session.contest.cards_total
    base = np.empty(n)
    alt = np.empty(n)
    spec = assertion.assorter
    group_truth: dict[str, list] = {}
    for ordinal in range(1, n + 1):
        loc = locate(session.manifest, ordinal)
        if loc.group_id == LINKED:
            cvr = session.linked_order[loc.linked_index]
            cvr_a = layout.linked[cvr.card_id]
            mvr_a = assort(spec, cvr)
        else:
            cvr_a = layout.group_means[loc.group_id]
            if loc.group_id not in group_truth:
                sub = session.results.subtotal_for(loc.group_id)
                w = int(sub.tally.get(spec.winner, 0))
                l = int(sub.tally.get(spec.loser, 0))
                group_truth[loc.group_id] = [Fraction(1)] * w + [Fraction(0)] * l \
                    + [Fraction(1, 2)] * (sub.cards - w - l)
            mvr_a = group_truth[loc.group_id][loc.position - 1]
        base[ordinal - 1] = float(overstatement_value(b, mvr_a, cvr_a))
        alt[ordinal - 1] = float(overstatement_value(b, Fraction(0), cvr_a))
    return base, alt


def _session_polling_stream(session):
    from .assorters import assort
    from .sampling import locate
    spec = session.assertions[0].assorter
    n = session.contest.cards_total
    base = np.empty(n)
    group_truth: dict[str, list] = {}
    for ordinal in range(1, n + 1):
        loc = locate(session.manifest, ordinal)
        if loc.group_id == LINKED:
            base[ordinal - 1] = float(assort(spec, session.linked_order[loc.linked_index]))
        else:
            if loc.group_id not in group_truth:
                sub = session.results.subtotal_for(loc.group_id)
                w = int(sub.tally.get(spec.winner, 0))
                l = int(sub.tally.get(spec.loser, 0))
                group_truth[loc.group_id] = [1.0] * w + [0.0] * l \
                    + [0.5] * (sub.cards - w - l)
            base[ordinal - 1] = group_truth[loc.group_id][loc.position - 1]
    return base, np.zeros(n)


def _apply_errors(rng, base: np.ndarray, alt: np.ndarray, rate: float) -> np.ndarray:
    if rate <= 0:
        return base
    flips = rng.random(len(base)) < rate
    base[flips] = alt[flips]
    return base


def run_miscertification_rate(scenario: Scenario, method: str, alpha: float,
                              reps: int = 2000, seed: str = "wrong",
                              **kwargs) -> tuple[float, float]:
    """Fraction of audits of a wrong reported outcome that nonetheless
    confirm, with its Monte Carlo standard error.  The scenario must carry a
    truth override under which the reported winner did not win."""
    if scenario.true_linked is None and scenario.true_groups is None:
        raise AuditError("DOMAIN", "scenario lacks a truth override")
    stats = run_expected_sample_size(scenario, method, alpha=alpha, reps=reps,
                                     seed=seed, **kwargs)
    rate = stats.confirmed / stats.reps
    se = math.sqrt(max(rate * (1 - rate), 1.0 / stats.reps) / stats.reps)
    return rate, se
