"""Risk-limiting election audits by card-level comparison against
overstatement-net-equivalent records synthesized from reported subtotals,
with ballot-polling and batch-comparison baselines and a Monte Carlo
workload harness."""

from .assorters import (Assertion, AssorterSpec, OverstatementAssorter,
                        affine_recover, assort, assorter_mean_and_margin,
                        make_assertions, overstatement_support,
                        overstatement_value, taint)
from .election import (BallotManifest, CardRecord, Contest, GroupSubtotal,
                       LINKED, ManifestEntry, NO_VOTE, ReportedResults,
                       VerificationReport, reported_winner, verify_accounting)
from .engine import (AuditSession, DrawInstruction, MethodConfig, draw_next,
                     full_count, open_session, plan_sample_size, record_mvr,
                     replay)
from .errors import AuditError
from .onecvr import OneLayout, build_one_layout, comparison_value, net_overstatement
from .risk import (AlphaConfig, KmState, RiskState, alpha_update, km_update,
                   make_alpha_state, make_sprt_state, measured_risk, sprt_update)
from .sampling import DrawSequence, locate, next_ppeb, next_uniform

__version__ = "0.1.0"
