from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from onit import engine as eng
from onit.errors import AuditError
from onit.simulate import (GridCell, GridConfig, Scenario, _grid_stream,
                           alpha_log_trajectory, comparison_population,
                           polling_population, run_expected_sample_size,
                           run_grid, run_kalamazoo, run_miscertification_rate,
                           score_geometric_mean)


def test_comparison_population_values(contrived_900):
    pop, upper, v = comparison_population(contrived_900)
    assert v == pytest.approx(0.05)
    assert upper == pytest.approx(2 / 1.95)
    assert len(pop) == 20_000
    assert pop.mean() == pytest.approx(1 / 1.95)
    uniq = sorted(set(np.round(pop, 10)))
    expected = sorted({round(1 / 1.95, 10),
                       round(1.1 / 1.95, 10), round(0.1 / 1.95, 10),
                       round(1.9 / 1.95, 10), round(0.9 / 1.95, 10)})
    assert uniq == expected


def test_polling_population(contrived_900):
    pop = polling_population(contrived_900)
    assert len(pop) == 20_000
    assert pop.mean() == pytest.approx(0.525)


def test_scenario_margin(contrived_900):
    assert contrived_900.margin() == Fraction(1, 20)


def test_from_theta_shapes():
    sc = Scenario.from_theta(0.55, 0.10, 10_000)
    assert sc.cards_total == 10_000
    counts = sc.groups[0]
    assert counts.winner_votes == 4950 and counts.loser_votes == 4050
    assert counts.other == 1000


def test_truth_override_changes_population(contrived_900):
    flipped = Scenario(name="flip", linked=(4000, 5000, 1000),
                       groups=contrived_900.groups)
    wrong = Scenario(name="wrong", linked=contrived_900.linked,
                     groups=contrived_900.groups,
                     true_linked=flipped.linked)
    pop, _, _ = comparison_population(wrong)
    assert pop.mean() < 0.5


def test_clca_deterministic_stopping():
    stats = run_expected_sample_size(Scenario.pure_clca(), "clca", reps=100,
                                     seed="t")
    # error-free comparison at a 5% margin: ceil(log(.05)/log(1-.05/2.0781))
    assert stats.mean == pytest.approx(124, abs=1e-9)
    assert stats.sd == 0


def test_bpa_factor_sanity():
    sc = Scenario(name="mini", linked=(600, 350, 50))
    stats = run_expected_sample_size(sc, "bpa", reps=100, seed="t")
    assert stats.confirmed == 100
    assert stats.mean < 1000


def test_unknown_method():
    with pytest.raises(AuditError):
        run_expected_sample_size(Scenario.pure_clca(), "nope", reps=100)


def test_rep_count_floor():
    with pytest.raises(AuditError):
        run_expected_sample_size(Scenario.pure_clca(), "clca", reps=10)


def test_simulation_reps_are_reproducible():
    sc = Scenario.contrived(900)
    a = run_expected_sample_size(sc, "one_clca", reps=100, seed="same")
    b = run_expected_sample_size(sc, "one_clca", reps=100, seed="same")
    assert a.mean == b.mean and a.quantiles == b.quantiles


def test_engine_and_vectorized_risk_agree(contrived_900):
    """One replication pushed through the live engine matches the vectorized
    trajectory draw for draw."""
    contest, results, manifest = contrived_900.to_election()
    session = eng.open_session(contest, results, manifest, "xpath",
                               eng.MethodConfig())
    a = session.assertions[0]
    st = session.risk[a.id]
    cfg = st.alpha_cfg
    xs = []
    from tests.test_engine import truth_for
    for _ in range(60):
        instruction = eng.draw_next(session)
        updates = eng.record_mvr(session, instruction.ordinal,
                                 truth_for(session, instruction))
        xs.append(float(updates[0][1]))
    vec = alpha_log_trajectory(np.array(xs), contest.cards_total,
                               st.upper, cfg)
    assert session.risk[a.id].log_t == pytest.approx(float(vec[-1]), rel=1e-10)


def test_kalamazoo_fixture_quantities():
    result = run_kalamazoo(permutations=200, seed="quick")
    # margin over 27,666 cards: (20,699 - 5,569 + half the 1,398 others)
    assert result.margin == str(Fraction(15_130, 27_666))
    assert float(result.clean_cvr_value) == pytest.approx(1 / (2 - 15_130 / 27_666))
    assert result.notes["clean_cvr_draws"] == "8"
    assert result.notes["stratified_sample_treated_as_srs"] == "true"
    assert 0 < result.mean_p < 1


def test_grid_one_stream_recovers_raw():
    sc = Scenario.from_theta(0.55, 0.10, 1000)
    raw_stream, raw_u, raw_eta = _grid_stream(sc, GridConfig("alpha_raw", 0.55, 10))
    one_stream, one_u, one_eta = _grid_stream(sc, GridConfig("alpha_one", 0.55, 10))
    np.testing.assert_allclose(one_stream, raw_stream, atol=1e-12)
    assert one_u == raw_u
    assert one_eta == pytest.approx(raw_eta, abs=1e-12)


def test_run_grid_monotone_in_theta():
    configs = [GridConfig("alpha_raw", 0.55, 10)]
    cells = run_grid([0.55, 0.65], [0.10], [2000], configs, reps=150,
                     alpha=0.05, seed="mono")
    sizes = {c.theta: c.mean_size for c in cells}
    assert sizes[0.65] < sizes[0.55]


def test_transformed_rows_score_close_to_raw():
    # the transform round trip costs essentially nothing: per-config scores
    # stay within a few percent of each other on a small grid
    configs = [GridConfig("alpha_raw", 0.55, 10), GridConfig("alpha_one", 0.55, 10)]
    cells = run_grid([0.55, 0.60], [0.10, 0.25], [2000], configs, reps=200,
                     alpha=0.05, seed="score")
    scores = score_geometric_mean(cells)
    raw = scores["alpha_raw eta=0.55 d=10"]
    one = scores["alpha_one eta=0.55 d=10"]
    assert abs(one - raw) / raw < 0.048


def test_score_geometric_mean():
    cells = [GridCell(0.55, 0.1, 100, "a", 200.0, 1.0, 10),
             GridCell(0.55, 0.1, 100, "b", 100.0, 1.0, 10),
             GridCell(0.60, 0.1, 100, "a", 50.0, 1.0, 10),
             GridCell(0.60, 0.1, 100, "b", 100.0, 1.0, 10)]
    scores = score_geometric_mean(cells)
    assert scores["a"] == pytest.approx(math.sqrt(2.0 * 1.0))
    assert scores["b"] == pytest.approx(math.sqrt(1.0 * 2.0))
    single = score_geometric_mean(cells[:1])
    assert single == {"a": 1.0}
    with pytest.raises(AuditError) as err:
        score_geometric_mean(cells[:3])
    assert err.value.code == "MISSING_CELL"


def test_identical_configs_score_one():
    cells = [GridCell(0.55, 0.1, 100, "a", 70.0, 1.0, 10),
             GridCell(0.55, 0.1, 100, "b", 70.0, 1.0, 10)]
    assert score_geometric_mean(cells) == {"a": 1.0, "b": 1.0}


def test_miscertification_requires_truth_override():
    with pytest.raises(AuditError):
        run_miscertification_rate(Scenario.pure_clca(), "clca", 0.05, reps=100)


def test_kalamazoo_rejects_zero_permutations():
    with pytest.raises(AuditError):
        run_kalamazoo(permutations=0)
