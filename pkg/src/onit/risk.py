"""Sequential risk-measuring functions.

Three test families, all anytime-valid so the audit may stop the moment a
measured risk drops to the risk limit:

* a nonnegative-supermartingale test for the mean of a bounded population,
  sampled without replacement, with either a fixed alternative or a
  truncated-shrinkage estimate of the alternative (the workhorse for
  card-level comparison streams);
* Wald's sequential probability ratio test for ballot polling;
* the Kaplan-Markov product test for batch comparison with sampling
  proportional to error bounds.

Martingale values are tracked in log space; the measured risk is
min(1, 1/max_j T_j), using the running maximum so that optional stopping at
any crossing is sound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .errors import AuditError

#: Alternatives are kept this far inside the support bound to avoid the
#: degenerate all-in bet; reproductions at table scale are insensitive to it.
ETA_CAP = 1 - 2.0 ** -20

_CERTAIN = float("inf")


@dataclass(frozen=True)
class AlphaConfig:
    """Parameters for the supermartingale test.

    estimator "fixed" keeps the alternative at eta0 (clamped inside
    (null mean, upper)); "shrink_trunc" shrinks the running sample mean
    toward eta0 with prior weight d, floored at the conditional null mean
    plus c/sqrt(d + j - 1) and capped just under the support bound.
    """

    eta0: float
    estimator: str = "shrink_trunc"   # or "fixed"
    d: int = 600
    c: float = 0.5

    def __post_init__(self):
        if self.estimator not in ("fixed", "shrink_trunc"):
            raise AuditError("DOMAIN", "unknown estimator", estimator=self.estimator)
        if self.estimator == "shrink_trunc" and self.d < 1:
            raise AuditError("DOMAIN", "shrinkage weight d must be >= 1", d=self.d)


@dataclass(frozen=True)
class RiskState:
    """Per-assertion sequential test state; immutable, updates return copies."""

    method: str                  # "alpha" | "sprt"
    population: int              # N, for the without-replacement null mean
    upper: float                 # upper bound on the data values
    log_t: float = 0.0
    log_t_max: float = 0.0
    j: int = 0                   # draws consumed
    running_sum: float = 0.0     # S_j
    alpha_cfg: Optional[AlphaConfig] = None
    theta: float = 0.0           # SPRT alternative: winner share of valid votes
    certain: bool = False        # null ruled out exactly

    def measured_risk(self) -> float:
        if self.certain:
            return 0.0
        return min(1.0, math.exp(-self.log_t_max))


def measured_risk(state: RiskState) -> float:
    return state.measured_risk()


def conditional_null_mean(state: RiskState) -> float:
    """Mean the remaining population must have for the null (mean <= 1/2)
    to hold, given the draws so far."""
    n, j, s = state.population, state.j, state.running_sum
    return (n / 2 - s) / (n - j)


def _eta(state: RiskState, mu: float) -> float:
    cfg = state.alpha_cfg
    cap = state.upper * ETA_CAP
    if cfg.estimator == "fixed":
        return min(max(cfg.eta0, mu), cap)
    j1 = cfg.d + state.j   # d + j - 1 for the j-th draw
    eta = (cfg.d * cfg.eta0 + state.running_sum) / j1
    eta = max(eta, mu + cfg.c / math.sqrt(j1))
    return min(eta, cap)


def alpha_update(state: RiskState, x: float) -> RiskState:
    """Consume one draw of the comparison (or raw) assorter stream.

    The multiplicative term is linear in x and equals 1 at the conditional
    null mean; if the running sum already exceeds the null total the null is
    impossible and the risk collapses to 0; if the null would require more
    than the upper bound of the remaining values, no draw can carry evidence
    and the term is 1.
    """
    if state.method != "alpha":
        raise AuditError("DOMAIN", "alpha_update on non-alpha state", method=state.method)
    if state.certain:
        return state
    if state.j >= state.population:
        raise AuditError("EXHAUSTED", "population fully drawn", j=state.j)
    u = state.upper
    if not (0 <= x <= u + 1e-12):
        raise AuditError("DOMAIN", "draw outside [0, upper]", x=x, upper=u)
    mu = conditional_null_mean(state)
    if mu < 0:
        return replace(state, certain=True, j=state.j + 1,
                       running_sum=state.running_sum + x, log_t=_CERTAIN)
    if mu >= u or math.isclose(mu, u, rel_tol=1e-9, abs_tol=1e-12):
        log_term = 0.0
    elif math.isclose(mu, 0.0, abs_tol=1e-15):
        log_term = 0.0
    else:
        eta = _eta(state, mu)
        term = (x / mu) * (eta - mu) / (u - mu) + (u - eta) / (u - mu)
        log_term = math.log(term) if term > 0 else -math.inf
    log_t = state.log_t + log_term
    new = replace(
        state,
        log_t=log_t,
        log_t_max=max(state.log_t_max, log_t),
        j=state.j + 1,
        running_sum=state.running_sum + x,
    )
    # A running sum above the null total rules the null out exactly.
    if new.running_sum > new.population / 2:
        new = replace(new, certain=True)
    return new


def make_alpha_state(population: int, upper: float, cfg: AlphaConfig) -> RiskState:
    return RiskState("alpha", population, upper, alpha_cfg=cfg)


def fixed_bet_eta(lam: float, upper: float, mu: float = 0.5) -> float:
    """Alternative equivalent to the fixed bet T *= 1 + lam*(x - mu)."""
    if not (0 <= lam < 1 / mu):
        raise AuditError("DOMAIN", "bet must lie in [0, 1/mu)", lam=lam)
    return mu + lam * mu * (upper - mu)


def make_sprt_state(population: int, theta: float) -> RiskState:
    """Ballot-polling SPRT with alternative theta = reported winner share of
    the valid votes; theta must exceed 1/2."""
    if not theta > 0.5:
        raise AuditError("DOMAIN", "SPRT alternative must exceed 1/2", theta=theta)
    return RiskState("sprt", population, 1.0, theta=theta)


def sprt_update(state: RiskState, assort_value: Fraction | float) -> RiskState:
    """Multiply by 2*theta on a winner card, 2*(1-theta) on a loser card, 1
    otherwise.  The with-replacement factors remain conservative when the
    draws are actually without replacement."""
    if state.method != "sprt":
        raise AuditError("DOMAIN", "sprt_update on non-sprt state", method=state.method)
    if state.certain:
        return state
    a = float(assort_value)
    if a == 1.0:
        factor = 2 * state.theta
    elif a == 0.0:
        factor = 2 * (1 - state.theta)
    elif a == 0.5:
        factor = 1.0
    else:
        raise AuditError("DOMAIN", "polling draw must assort to 0, 1/2 or 1", value=a)
    log_t = state.log_t + math.log(factor)
    return replace(state, log_t=log_t, log_t_max=max(state.log_t_max, log_t),
                   j=state.j + 1, running_sum=state.running_sum + a)


@dataclass(frozen=True)
class KmState:
    """Kaplan-Markov product over PPEB batch draws.

    total_bound is the sum of the batch error bounds in units of the margin
    deficit the null asserts (U > 1 whenever the reported outcome has any
    slack); each error-free draw multiplies the P-value by (1 - 1/U).
    """

    total_bound: float                     # U
    log_p: float = 0.0
    draws: tuple[float, ...] = field(default_factory=tuple)
    stalled: bool = False                  # a taint of 1 was seen

    def __post_init__(self):
        if self.total_bound <= 1:
            raise AuditError("DOMAIN", "total error bound must exceed 1",
                             U=self.total_bound)

    def p_value(self) -> float:
        return min(1.0, math.exp(self.log_p))


def km_update(state: KmState, taint_value: Fraction | float) -> KmState:
    """Multiply P by (1 - 1/U)/(1 - taint), capping at 1.

    A taint of exactly 1 makes the factor infinite: the draw carries no
    usable evidence and the audit must escalate; this is signalled by
    TAINT_AT_ONE with the state marked stalled.
    """
    t = float(taint_value)
    if t > 1:
        raise AuditError("DOMAIN", "taint exceeds 1", taint=t)
    if t == 1.0:
        raise AuditError("TAINT_AT_ONE",
                         "batch error met its bound: cannot conclude, escalate",
                         draws=len(state.draws))
    log_p = state.log_p + math.log(1 - 1 / state.total_bound) - math.log(1 - t)
    return replace(state, log_p=log_p, draws=state.draws + (t,))
