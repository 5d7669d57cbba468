import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhstop.estimation import (
    EXAMPLE1_BLUE,
    EXAMPLE1_RED,
    EXAMPLE2_P,
    BetaGrid,
    CompletionSpec,
    EstimationSpec,
    bars,
    beta_curve,
    criterion_value,
    cross_entropy,
    estimate_beta,
    model_profile,
)
from qhstop.model import StoppingProblem, simulate_stopping


def test_grid_values():
    g = BetaGrid(0.3, 1.0, 0.0005).values()
    assert g[0] == 0.3 and g[-1] == 1.0 and len(g) == 1401
    with pytest.raises(ValueError):
        BetaGrid(1.0, 0.3)
    with pytest.raises(ValueError):
        BetaGrid(step=0)


def test_spec_validation():
    with pytest.raises(ValueError):
        EstimationSpec("normal", criterion="mystery")
    with pytest.raises(ValueError):
        EstimationSpec("normal", sd=0)
    with pytest.raises(ValueError):
        EstimationSpec("normal", distance_on="sideways")


def test_uniform_spec_reproduces_data():
    p = model_profile(EstimationSpec("uniform", 0.0, 1 / math.sqrt(3)), 1.0).p
    assert [float(x) for x in p] == pytest.approx(EXAMPLE2_P, abs=5e-6)


@pytest.mark.parametrize("family", ["uniform", "normal", "logistic", "extreme_value"])
def test_one_period_always_stops(family):
    assert model_profile(EstimationSpec(family, horizon=1), 0.6).p == (1,)


def test_criteria_at_truth():
    assert criterion_value(EXAMPLE2_P, EXAMPLE2_P, "squared_distance") == 0
    assert criterion_value(EXAMPLE2_P, EXAMPLE2_P, "squared_distance", "conditional") == 0
    assert criterion_value(EXAMPLE2_P, EXAMPLE2_P, "likelihood") == pytest.approx(1.592, abs=5e-4)


def test_criterion_rejects_length_mismatch():
    with pytest.raises(ValueError):
        criterion_value((0.5, 1), (0.2, 0.5, 1), "likelihood")
    with pytest.raises(ValueError):
        criterion_value((0.5, 1), (0.5, 1), "bogus")


def test_cross_entropy_infinite_when_model_misses_data():
    assert cross_entropy([0.5, 0.5], [1.0, 0.0]) == math.inf
    assert cross_entropy([1.0, 0.0], [1.0, 0.0]) == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=6), st.lists(st.floats(0, 1), min_size=2, max_size=6))
def test_likelihood_minimised_at_truth(a, b):
    n = min(len(a), len(b))
    a, b = tuple(a[: n - 1]) + (1.0,), tuple(b[: n - 1]) + (1.0,)
    # Gibbs' inequality
    assert criterion_value(b, a, "likelihood") >= criterion_value(a, a, "likelihood") - 1e-12


def test_normal_at_table_value():
    spec = EstimationSpec("normal")
    d = criterion_value(model_profile(spec, 0.819).p, EXAMPLE2_P, "squared_distance")
    assert math.sqrt(d) == pytest.approx(0.0026777, abs=5e-7)


def test_estimate_recovers_truth_for_uniform():
    spec = EstimationSpec("uniform", 0.0, 1 / math.sqrt(3), beta_grid=BetaGrid(0.9, 1.0, 0.005))
    res = estimate_beta(spec, EXAMPLE2_P)
    assert res.beta_hat == pytest.approx(1.0)
    assert res.distance < 1e-5
    assert res.curve_array().shape == (21, 2)


def test_threads_do_not_change_curve():
    spec = EstimationSpec("logistic", beta_grid=BetaGrid(0.6, 1.0, 0.01))
    assert np.array_equal(beta_curve(spec, EXAMPLE2_P, threads=1), beta_curve(spec, EXAMPLE2_P, threads=4))


def test_estimate_errors_when_curve_infinite():
    # data that completes everything at t=1 vs a model that never does
    spec = EstimationSpec("uniform", -50.0, 0.1, criterion="likelihood", horizon=2,
                          beta_grid=BetaGrid(0.5, 1.0, 0.25), terminal_value=-10.0)
    with pytest.raises(ValueError):
        estimate_beta(spec, (1.0, 1.0))


def test_grid_refinement_is_stable():
    coarse = estimate_beta(EstimationSpec("normal", beta_grid=BetaGrid(0.3, 1.0, 0.005)), EXAMPLE2_P)
    fine = estimate_beta(EstimationSpec("normal", beta_grid=BetaGrid(0.3, 1.0, 0.0005)), EXAMPLE2_P)
    assert abs(coarse.beta_hat - fine.beta_hat) <= 0.005
    assert fine.criterion_value <= coarse.criterion_value + 1e-15


@pytest.mark.slow
def test_normal_profile_matches_simulation():
    spec = EstimationSpec("normal")
    prof = model_profile(spec, 1.0).floats()
    problem = StoppingProblem.stationary(spec.law(), spec.horizon, spec.terminal_value)
    sim = simulate_stopping(problem, prof, 10**6, seed=2024)
    z = (sim["freq"][:-1] - np.array(prof.p[:-1])) / sim["se"][:-1]
    assert np.all(np.abs(z) < 3)
    assert sim["freq"][-1] == 1.0


def test_completion_spec_readings():
    a = CompletionSpec(1.0, 1.0, 0.7)
    b = CompletionSpec(1.0, 1.0, 0.7, penalty_reading="beta_scaled")
    assert a.problem().terminal_value == -5.0
    assert b.problem().terminal_value == pytest.approx(-3.5)
    with pytest.raises(ValueError):
        CompletionSpec(1.0, 1.0, 0.7, penalty_reading="other")


def test_example_one_unconditional_profiles_close():
    out = bars({"red": EXAMPLE1_RED, "blue": EXAMPLE1_BLUE})
    gap = max(abs(a - b) for a, b in zip(out["red"]["q"], out["blue"]["q"]))
    assert gap < 0.01
    for row in out.values():
        assert sum(row["q"]) + row["never"] == pytest.approx(1)
    # the red agent's last-period hazard sits above one half
    assert out["red"]["p"][-1] > 0.5
