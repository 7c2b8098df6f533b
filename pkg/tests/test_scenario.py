"""Scenario validation, serialization round-trips, and the builtin instances."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sigdetect as sd
from helpers import random_scenario


def counterexample():
    return sd.builtin_counterexample(1.5, 0.5)


# ---------------------------------------------------------------------------
# validation


def test_builtin_counterexample_validates():
    report = sd.validate_scenario(counterexample())
    assert report.ok
    assert str(report) == "scenario valid"


def test_all_tiny_variants_validate():
    for variant in range(5):
        assert sd.validate_scenario(sd.builtin_tiny_instance(variant)).ok


def test_prior_out_of_range_flagged():
    s = dataclasses.replace(counterexample(), prior_h0=1.5)
    report = sd.validate_scenario(s)
    assert not report.ok
    assert any(v.path == "prior_h0" for v in report.violations)


def test_operating_cost_ordering_enforced():
    base = counterexample()
    for K, k in ((0.5, 1.0), (1.0, 1.0), (1.0, 0.0), (1.0, -0.5)):
        s = dataclasses.replace(base, cost_both_active=K, cost_one_active=k)
        report = sd.validate_scenario(s)
        assert not report.ok, (K, k)
        assert any("K > k > 0" in v.message for v in report.violations)


def test_terminal_cost_diagonal_must_be_zero():
    s = dataclasses.replace(counterexample(), terminal_cost=((0.1, 100.0), (100.0, 0.0)))
    report = sd.validate_scenario(s)
    assert any(v.path == "terminal_cost" for v in report.violations)


def test_terminal_cost_negative_entry_flagged():
    s = dataclasses.replace(counterexample(), terminal_cost=((0.0, -1.0), (100.0, 0.0)))
    report = sd.validate_scenario(s)
    assert any(v.path == "terminal_cost[0][1]" for v in report.violations)


def test_observer_count_must_be_two():
    base = counterexample()
    s = dataclasses.replace(base, observers=base.observers[:1])
    report = sd.validate_scenario(s)
    assert any(v.path == "observers" for v in report.violations)


def test_row_sum_violation_names_the_row():
    base = counterexample()
    broken = dataclasses.replace(
        base.observers[0],
        likelihood=(((0.6, 0.3), base.observers[0].likelihood[0][1]),)
        + base.observers[0].likelihood[1:],
    )
    s = dataclasses.replace(base, observers=(broken, base.observers[1]))
    report = sd.validate_scenario(s)
    assert any(v.path == "observers[1].likelihood[t=1][h=0]" for v in report.violations)
    assert any("sums to" in v.message for v in report.violations)


def test_likelihood_table_count_must_match_horizon():
    base = counterexample()
    short = dataclasses.replace(
        base.observers[0], likelihood=base.observers[0].likelihood[:2]
    )
    s = dataclasses.replace(base, observers=(short, base.observers[1]))
    report = sd.validate_scenario(s)
    assert any(v.path == "observers[1].likelihood" for v in report.violations)


def test_row_length_must_match_alphabet():
    base = counterexample()
    wide = dataclasses.replace(base.observers[0], alphabet_size=4)
    s = dataclasses.replace(base, observers=(wide, base.observers[1]))
    report = sd.validate_scenario(s)
    assert any("row length" in v.message for v in report.violations)


def test_random_scenarios_validate():
    rng = np.random.default_rng(11)
    for _ in range(25):
        assert sd.validate_scenario(random_scenario(rng)).ok


# ---------------------------------------------------------------------------
# serialization


def test_save_load_round_trip_is_exact():
    s = counterexample()
    assert sd.load_scenario(sd.save_scenario(s)) == s


def test_round_trip_preserves_awkward_floats():
    rng = np.random.default_rng(23)
    for _ in range(10):
        s = random_scenario(rng)
        again = sd.load_scenario(sd.save_scenario(s))
        assert again == s  # bit-exact, not approximately


def test_round_trip_of_tiny_instances():
    for variant in range(5):
        s = sd.builtin_tiny_instance(variant)
        assert sd.load_scenario(sd.save_scenario(s)) == s


def test_load_rejects_garbage():
    with pytest.raises(sd.ScenarioFormatError):
        sd.load_scenario("not a scenario file = [[[")


def test_load_rejects_wrong_schema():
    text = sd.save_scenario(counterexample()).replace("schema = 1", "schema = 2", 1)
    with pytest.raises(sd.ScenarioFormatError, match="schema"):
        sd.load_scenario(text)


def test_load_rejects_missing_field():
    text = sd.save_scenario(counterexample()).replace("horizon = 3\n", "", 1)
    with pytest.raises(sd.ScenarioFormatError):
        sd.load_scenario(text)


def test_load_runs_validation():
    text = sd.save_scenario(counterexample()).replace(
        "cost_both_active = 1.5", "cost_both_active = 0.25", 1
    )
    with pytest.raises(sd.ScenarioValidationError) as excinfo:
        sd.load_scenario(text)
    assert not excinfo.value.report.ok


# ---------------------------------------------------------------------------
# builtin counterexample family


def test_counterexample_shape():
    s = counterexample()
    assert s.horizon == 3
    assert s.cost_both_active == 1.5
    assert s.cost_one_active == 1.0
    assert s.observers[0].alphabet_size == 2
    assert s.observers[1].alphabet_size == 3
    # the third own-symbol step of observer 1 reveals the hypothesis
    final = s.observers[0].likelihood[2]
    assert final[0][0] == 1.0 and final[1][0] == 0.0


@pytest.mark.parametrize(
    "K,r1,mistake",
    [(1.0, 0.5, 100.0), (2.0, 0.5, 100.0), (1.5, 0.0, 100.0), (1.5, 1.0, 100.0), (1.5, 0.5, 2.0)],
)
def test_counterexample_domain_errors(K, r1, mistake):
    with pytest.raises(ValueError):
        sd.builtin_counterexample(K, r1, mistake)


@settings(max_examples=60, deadline=None)
@given(
    K=st.floats(min_value=1.0 + 1e-6, max_value=2.0 - 1e-6),
    r1=st.floats(min_value=1e-6, max_value=1.0 - 1e-6),
)
def test_counterexample_valid_across_domain(K, r1):
    assert sd.validate_scenario(sd.builtin_counterexample(K, r1)).ok


def test_reference_costs_at_golden_point():
    assert sd.reference_pair_cost("ex1", 1.5, 0.5) == 1.75
    assert sd.reference_pair_cost("ex2", 1.5, 0.5) == 1.75
    assert sd.reference_pair_cost("nonthreshold", 1.5, 0.5) == 1.625


def test_reference_costs_second_point():
    # closed forms at (K, r1) = (1.9, 0.1)
    assert sd.reference_pair_cost("ex1", 1.9, 0.1) == pytest.approx(0.1 + 0.9 * 2.9, abs=1e-12)
    assert sd.reference_pair_cost("ex2", 1.9, 0.1) == pytest.approx(1.95, abs=1e-12)
    assert sd.reference_pair_cost("nonthreshold", 1.9, 0.1) == pytest.approx(1.945, abs=1e-12)


def test_reference_cost_rejects_unknown_kind():
    with pytest.raises(ValueError):
        sd.reference_pair_cost("wald", 1.5, 0.5)


def test_builtin_policies_cover_every_decision_key():
    s = counterexample()
    for kind in sd.POLICY_KINDS:
        p1, p2 = sd.builtin_policies(kind, s)
        for policy, observer in ((p1, 1), (p2, 2)):
            assert policy.observer == observer
            for t, prefix, status in sd.decision_keys(s, observer):
                action = policy.action_at(t, prefix, status)
                assert action in sd.admissible_actions(t, s.horizon)


def test_builtin_policies_reject_other_scenarios():
    with pytest.raises(ValueError):
        sd.builtin_policies("ex1", sd.builtin_tiny_instance(0))


def test_builtin_policies_reject_unknown_kind():
    with pytest.raises(ValueError):
        sd.builtin_policies("wald", counterexample())


def test_tiny_instance_variants():
    s = sd.builtin_tiny_instance(0)
    assert s.horizon == 2
    assert s.observers[0].alphabet_size == 2
    assert s.observers[1].alphabet_size == 1
    with pytest.raises(ValueError):
        sd.builtin_tiny_instance(5)
