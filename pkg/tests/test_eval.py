"""Exact evaluation, Monte Carlo, and the brute-force policy-space oracles."""

import numpy as np
import pytest

import sigdetect as sd
from sigdetect.policies import ACTIVE
from helpers import random_history_policy, random_scenario


def counterexample():
    return sd.builtin_counterexample(1.5, 0.5)


def flat_scenario(prior=0.5, horizon=1, mistake=6.0):
    """No information at all: single-symbol alphabets on both sides."""
    obs = sd.ObservationModel(
        alphabet_size=1, likelihood=(((1.0,), (1.0,)),) * horizon
    )
    return sd.Scenario(
        prior_h0=prior,
        horizon=horizon,
        cost_both_active=1.5,
        cost_one_active=1.0,
        terminal_cost=((0.0, mistake), (mistake, 0.0)),
        observers=(obs, obs),
    )


# ---------------------------------------------------------------------------
# exact evaluation


def test_no_information_pair_costs_half_the_mistake():
    s = flat_scenario(prior=0.5, mistake=8.0)
    declare0 = {(1, (0,), ACTIVE): sd.DECLARE_0}
    p1 = sd.HistoryPolicy.from_mapping(1, declare0)
    p2 = sd.HistoryPolicy.from_mapping(2, declare0)
    cost, trace = sd.exact_cost(s, p1, p2, want_trace=True)
    assert cost == 4.0
    assert all(o.breakdown.operating_cost == 0.0 for o in trace)


def test_golden_pair_costs():
    s = counterexample()
    for kind in sd.POLICY_KINDS:
        p1, p2 = sd.builtin_policies(kind, s)
        cost, _ = sd.exact_cost(s, p1, p2)
        assert cost == sd.reference_pair_cost(kind, 1.5, 0.5)


def test_trace_is_a_full_distribution_with_the_tie_rule():
    rng = np.random.default_rng(51)
    for _ in range(12):
        s = random_scenario(rng, max_horizon=3)
        p1 = random_history_policy(rng, s, 1)
        p2 = random_history_policy(rng, s, 2)
        cost, trace = sd.exact_cost(s, p1, p2, want_trace=True)
        assert abs(sum(o.probability for o in trace) - 1.0) <= 1e-12
        recombined = sum(o.probability * o.breakdown.total for o in trace)
        assert recombined == pytest.approx(cost, abs=1e-12)
        for outcome in trace:
            b = outcome.breakdown
            assert 1 <= b.tau_min <= b.tau_max <= s.horizon
            assert b.last_decider == (1 if b.tau2 < b.tau1 else 2)
            assert b.total == b.operating_cost + b.terminal_cost
            expected_operating = s.cost_both_active * (b.tau_min - 1) + s.cost_one_active * (
                b.tau_max - b.tau_min
            )
            assert b.operating_cost == pytest.approx(expected_operating, abs=1e-12)


def test_blank_at_horizon_policy_is_rejected():
    s = counterexample()
    stuck = sd.HistoryPolicy.from_mapping(
        1, {key: sd.BLANK for key in sd.decision_keys(s, 1)}
    )
    fine = sd.blank_until_horizon_policy(s, 2)
    with pytest.raises(sd.PolicyFormatError):
        sd.exact_cost(s, stuck, fine)


def test_pair_must_be_one_of_each_observer():
    s = counterexample()
    p1 = sd.blank_until_horizon_policy(s, 1)
    with pytest.raises(ValueError):
        sd.exact_cost(s, p1, p1)


def test_nonthreshold_pair_is_person_by_person_stable(quiet_unreachable):
    # neither observer can improve on 1.625 unilaterally: the pair that
    # beats both threshold pairs is a genuine equilibrium, not a fluke
    s = counterexample()
    g1, g2 = sd.builtin_policies("nonthreshold", s)
    _, _, br2 = sd.best_response(s, g1, 2)
    _, _, br1 = sd.best_response(s, g2, 1)
    assert br2 == 1.625
    assert br1 == 1.625


# ---------------------------------------------------------------------------
# Monte Carlo


def test_degenerate_scenario_simulates_exactly():
    # prior 1 and deterministic symbols: every sample path is identical
    s = flat_scenario(prior=1.0, horizon=2)
    p1 = sd.blank_until_horizon_policy(s, 1)
    p2 = sd.blank_until_horizon_policy(s, 2)
    exact, _ = sd.exact_cost(s, p1, p2)
    result = sd.simulate(s, p1, p2, n=4096, seed=3)
    assert result.count == 4096
    assert result.seed == 3
    assert result.std == 0.0
    assert result.half_width == 0.0
    assert result.mean == exact


def test_simulation_matches_exact_value_statistically():
    s = counterexample()
    p1, p2 = sd.builtin_policies("nonthreshold", s)
    result = sd.simulate(s, p1, p2, n=200_000, seed=11)
    exact, _ = sd.exact_cost(s, p1, p2)
    assert abs(result.mean - exact) <= 5.0 * result.half_width
    assert result.half_width == pytest.approx(
        1.96 * result.std / np.sqrt(result.count), abs=1e-15
    )


def test_simulation_is_seed_deterministic_and_seed_sensitive():
    s = counterexample()
    p1, p2 = sd.builtin_policies("ex1", s)
    a = sd.simulate(s, p1, p2, n=50_000, seed=7)
    b = sd.simulate(s, p1, p2, n=50_000, seed=7)
    c = sd.simulate(s, p1, p2, n=50_000, seed=8)
    assert (a.mean, a.std, a.half_width) == (b.mean, b.std, b.half_width)
    assert a.mean != c.mean


def test_per_sample_fallback_agrees_with_table_mode(monkeypatch):
    s = counterexample()
    p1, p2 = sd.builtin_policies("ex2", s)
    fast = sd.simulate(s, p1, p2, n=20_000, seed=13)
    monkeypatch.setattr("sigdetect.evaluation._TABLE_MODE_LIMIT", 0)
    slow = sd.simulate(s, p1, p2, n=20_000, seed=13)
    assert (fast.mean, fast.std) == (slow.mean, slow.std)


def test_simulate_validates_sample_count():
    s = counterexample()
    p1, p2 = sd.builtin_policies("ex1", s)
    with pytest.raises(ValueError):
        sd.simulate(s, p1, p2, n=0, seed=1)


# ---------------------------------------------------------------------------
# brute force


def test_policy_counts_on_the_tiny_instance():
    s = sd.builtin_tiny_instance(0)
    assert sd.policy_count(s, 1) == 576
    assert sd.policy_count(s, 2) == 24
    policies = list(sd.enumerate_policies(s, 2))
    assert len(policies) == 24
    assert len(set(policies)) == 24


def test_enumeration_is_lexicographic_from_all_zero():
    s = sd.builtin_tiny_instance(0)
    first = next(iter(sd.enumerate_policies(s, 2)))
    assert all(action == sd.DECLARE_0 for _, action in first.rules)


def test_brute_force_without_information_matches_hand_value():
    s = flat_scenario(prior=0.4, horizon=2)
    p1, p2, cost = sd.brute_force_global(s)
    # nothing to learn: stop both at t=1 and take the prior's smaller side
    assert cost == 0.4 * 6.0
    # lexicographically earliest argmin: observer 1 declares 0, observer 2's
    # simultaneous declaration of 1 is what counts under the tie rule
    assert all(action == sd.DECLARE_0 for _, action in p1.rules)
    assert p2.action_at(1, (0,), ACTIVE) == sd.DECLARE_1
    assert all(
        action == sd.DECLARE_0 for (t, _, _), action in p2.rules if t == 2
    )


def test_brute_force_tie_break_is_lexicographic():
    s = flat_scenario(prior=0.5, horizon=1)
    p1, p2, cost = sd.brute_force_global(s)
    assert cost == 3.0
    # every pair costs the same here; the all-declare-0 pair sorts first
    assert all(action == sd.DECLARE_0 for _, action in p1.rules)
    assert all(action == sd.DECLARE_0 for _, action in p2.rules)


def test_brute_force_size_limit():
    s = sd.builtin_tiny_instance(0)
    with pytest.raises(sd.PolicySpaceTooLargeError) as excinfo:
        sd.brute_force_global(s, size_limit=10)
    assert excinfo.value.count == 13_824
    assert excinfo.value.limit == 10
    with pytest.raises(sd.PolicySpaceTooLargeError):
        sd.brute_force_global(counterexample())


def test_brute_force_best_response_matches_dp(quiet_unreachable):
    for variant, which in ((0, 2), (1, 1)):
        s = sd.builtin_tiny_instance(variant)
        peer = sd.blank_until_horizon_policy(s, 3 - which)
        _, _, dp_cost = sd.best_response(s, peer, which)
        _, bf_cost = sd.brute_force_best_response(s, peer, which)
        assert bf_cost == pytest.approx(dp_cost, abs=1e-12)


def test_brute_force_parallel_matches_serial(monkeypatch):
    s = sd.builtin_tiny_instance(0)
    monkeypatch.delenv("SIGDETECT_THREADS", raising=False)
    serial = sd.brute_force_global(s)
    monkeypatch.setenv("SIGDETECT_THREADS", "2")
    parallel = sd.brute_force_global(s)
    assert parallel == serial
