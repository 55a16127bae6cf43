import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pevclock.analytics import (
    ClickLaw,
    compare,
    ell_max,
    figure_data,
    first_click_at,
    mean_ell,
    prob_click_at,
    second_moment_ell,
    series_moment,
    two_sample_test,
    var_ell,
)
from pevclock.errors import DomainError
from pevclock.montecarlo import ClickStatistics, SimulationConfig, XiDistribution, simulate
from pevclock.two_state import TwoStateParams

probs = st.floats(0.02, 0.98)


@pytest.mark.parametrize("p,expected", [(0.1, 9.49), (0.25, 3.48), (0.5, 1.44)])
def test_ell_max_values(p, expected):
    assert ell_max(p) == pytest.approx(expected, abs=0.01)


def test_headline_moments():
    assert mean_ell(0.5) == 3.0
    assert var_ell(0.5) == 4.0
    assert math.sqrt(var_ell(0.5)) == 2.0


@given(probs)
def test_closed_forms_match_series(p):
    m1 = series_moment(p, 1)
    m2 = series_moment(p, 2)
    assert m1 == pytest.approx(mean_ell(p), rel=1e-9)
    assert m2 == pytest.approx(second_moment_ell(p), rel=1e-9)
    assert m2 - m1**2 == pytest.approx(var_ell(p), rel=1e-8)
    assert series_moment(p, 0, "first_click") == pytest.approx(1.0, abs=1e-9)
    assert series_moment(p, 1, "first_click") == pytest.approx(1 / p, rel=1e-9)


@given(probs)
def test_ell_max_maximizes_single_click_law(p):
    lm = ell_max(p)
    # the law increases up to l_max and decreases after it
    lo, hi = math.floor(lm), math.ceil(lm)
    best = max(range(1, 200), key=lambda ell: prob_click_at(p, ell))
    assert best in (lo, hi)


@given(probs, st.integers(1, 50))
def test_single_click_law_is_l_times_first_click_law_times_p(p, ell):
    assert prob_click_at(p, ell) == pytest.approx(ell * p * first_click_at(p, ell))


def test_variance_decreases_in_p():
    ps = np.linspace(0.01, 1.0, 100)
    v = [var_ell(p) for p in ps]
    assert all(a > b for a, b in zip(v, v[1:]))
    assert var_ell(1.0) == 0.0


def test_domain_errors():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            mean_ell(bad)
    with pytest.raises(DomainError):
        ell_max(1.0)
    with pytest.raises(DomainError):
        prob_click_at(0.5, 0)


def test_figure_tables():
    fig1 = figure_data("fig1")
    assert fig1.columns == ("ell", "prob_p0.1", "prob_p0.25", "prob_p0.5")
    assert len(fig1.rows) == 40
    assert fig1.column("prob_p0.5")[0] == 0.25
    fig2 = figure_data("fig2")
    var = dict(zip(fig2.column("p"), fig2.column("var")))
    assert var[0.5] == 4.0
    custom = figure_data("fig1", [0.2, 0.3, 0.4, 0.6])
    assert len(custom.columns) == 5
    with pytest.raises(ValueError):
        figure_data("fig3")


def test_from_params_averages_overlap():
    law = ClickLaw.from_params(TwoStateParams(math.pi / 4), XiDistribution("exponential", 0.1))
    assert law.p == 0.5
    exact = ClickLaw.from_params(TwoStateParams(math.pi / 4, overlap_mode="exact-grid"),
                                 XiDistribution("exponential", 0.1))
    # E[exp(-xi^2/2)] for exponential xi with mean 0.1, to second order
    assert exact.p == pytest.approx(0.5 * (1 - 0.01), abs=2e-4)


def test_compare_accepts_correct_and_rejects_wrong_law():
    cfg = SimulationConfig(TwoStateParams(math.pi / 4), XiDistribution("delta", 0.0), n_trajectories=200_000,
                           seed=11)
    stats = simulate(cfg).stats
    good = compare(stats, ClickLaw(0.5))
    assert good.passed and good.tv_distance < 0.01
    bad = compare(stats, ClickLaw(0.4))
    assert not bad.passed
    with pytest.raises(ValueError):
        compare(stats, ClickLaw(0.5), "single_click")


def test_single_click_comparison_continue_mode():
    cfg = SimulationConfig(TwoStateParams(math.pi / 8), XiDistribution("delta", 0.0), n_trajectories=50_000,
                           max_steps=400, seed=12, stop_after=None)
    stats = simulate(cfg).stats
    rep = compare(stats, ClickLaw(0.25), "single_click")
    assert rep.passed
    assert rep.mean_analytic == pytest.approx(mean_ell(0.25), rel=1e-6)
    assert abs(rep.z_mean) < 3


def test_compare_no_events():
    stats = ClickStatistics.from_click_steps([0, 0], [0, 0], 5, False)
    rep = compare(stats, ClickLaw(0.5))
    assert rep.insufficient and not rep.passed


def test_report_outputs(tmp_path):
    stats = ClickStatistics.from_click_steps([1, 2, 2, 3], [0] * 4, 10, False)
    rep = compare(stats, ClickLaw(0.5))
    rep.write_csv(tmp_path / "s.csv")
    rep.write_summary_csv(tmp_path / "r.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "ell,count,empirical_prob,analytic_prob,abs_error"
    assert "tv_distance: " in rep.to_text()


def test_two_sample_detects_difference():
    a = simulate(SimulationConfig(TwoStateParams(math.pi / 4), n_trajectories=20_000, seed=1)).stats
    b = simulate(SimulationConfig(TwoStateParams(math.pi / 4), n_trajectories=20_000, seed=2)).stats
    c = simulate(SimulationConfig(TwoStateParams(0.6), n_trajectories=20_000, seed=3)).stats
    assert two_sample_test(a, b).passed
    assert not two_sample_test(a, c).passed
