"""Bayes update properties: hand values, martingale, identities, edge cases."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sigdetect as sd
from sigdetect.belief import outcome_distribution, update_joint, update_own

prob = st.floats(min_value=0.0, max_value=1.0)
likelihood = st.floats(min_value=1e-6, max_value=1.0)


def normalized_row(rng, n):
    w = rng.random(n) + 1e-3
    return tuple(float(x) for x in (w / w.sum()))


# ---------------------------------------------------------------------------
# hand-checked values


def test_update_own_hand_values():
    assert update_own(0.37, 0.5, 0.5) == 0.37
    assert update_own(0.5, 0.8, 0.2) == 0.8
    assert update_own(0.5, 1.0, 0.0) == 1.0


def test_update_joint_hand_values():
    assert update_joint(0.5, 0.5, 0.5, 0.6, 0.3) == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert update_joint(0.5, 0.8, 0.2, 0.5, 0.25) == pytest.approx(8.0 / 9.0, abs=1e-15)


def test_certain_blank_message_is_identity():
    for pi in (0.0, 0.2, 0.5, 0.9, 1.0):
        assert update_joint(pi, 0.5, 0.5, 1.0, 1.0) == pi


def test_equal_likelihoods_identity_on_grid():
    for pi in (0.0, 0.25, 0.5, 0.75, 1.0):
        assert update_own(pi, 0.5, 0.5) == pi
        # non-dyadic likelihoods pick up at most an ulp of normalization noise
        assert update_own(pi, 0.7, 0.7) == pytest.approx(pi, abs=1e-15)


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=200, deadline=None)
@given(belief=prob, l0=likelihood, l1=likelihood)
def test_update_own_stays_in_unit_interval(belief, l0, l1):
    out = update_own(belief, l0, l1)
    assert 0.0 <= out <= 1.0


@settings(max_examples=200, deadline=None)
@given(belief=prob, l0=likelihood, l1=likelihood, m=likelihood)
def test_update_joint_with_flat_message_matches_update_own(belief, l0, l1, m):
    assert update_joint(belief, l0, l1, m, m) == pytest.approx(
        update_own(belief, l0, l1), abs=1e-15
    )


@settings(max_examples=200, deadline=None)
@given(l0=likelihood, l1=likelihood)
def test_certainty_is_absorbing(l0, l1):
    assert update_own(0.0, l0, l1) == 0.0
    assert update_own(1.0, l0, l1) == 1.0


def test_impossible_outcome_raises():
    with pytest.raises(sd.ImpossibleOutcomeError):
        update_own(1.0, 0.0, 0.7)
    with pytest.raises(sd.ImpossibleOutcomeError):
        update_joint(0.5, 0.0, 0.5, 1.0, 0.0)


def test_martingale_over_own_updates():
    rng = np.random.default_rng(5)
    for _ in range(300):
        pi = float(rng.uniform(0.0, 1.0))
        n = int(rng.integers(2, 5))
        row0, row1 = normalized_row(rng, n), normalized_row(rng, n)
        outcomes = outcome_distribution(pi, row0, row1)
        assert abs(sum(o.probability for o in outcomes) - 1.0) <= 1e-12
        pulled_back = sum(o.probability * o.posterior for o in outcomes)
        assert abs(pulled_back - pi) <= 1e-10


def test_martingale_over_joint_updates():
    rng = np.random.default_rng(6)
    for _ in range(300):
        pi = float(rng.uniform(0.0, 1.0))
        n = int(rng.integers(2, 5))
        row0, row1 = normalized_row(rng, n), normalized_row(rng, n)
        messages = (normalized_row(rng, 3), normalized_row(rng, 3))
        outcomes = outcome_distribution(pi, row0, row1, messages)
        assert abs(sum(o.probability for o in outcomes) - 1.0) <= 1e-12
        pulled_back = sum(o.probability * o.posterior for o in outcomes)
        assert abs(pulled_back - pi) <= 1e-10


# ---------------------------------------------------------------------------
# outcome enumeration


def test_silent_peer_marks_message_absent():
    outcomes = outcome_distribution(0.5, (0.9, 0.1), (0.2, 0.8))
    assert [o.message for o in outcomes] == [-1, -1]


def test_certainty_outcomes_keep_posterior_one():
    outcomes = outcome_distribution(1.0, (0.9, 0.1), (0.2, 0.8))
    assert [(o.symbol, o.probability, o.posterior) for o in outcomes] == [
        (0, 0.9, 1.0),
        (1, 0.1, 1.0),
    ]


def test_counterexample_first_step_posteriors():
    # observer 2's first symbol at even prior, peer certainly blank:
    # the outer symbols reveal the hypothesis, the middle one says nothing
    s = sd.builtin_counterexample(1.5, 0.5)
    row0, row1 = s.observers[1].likelihood[0]
    blank_only = ((0.0, 0.0, 1.0), (0.0, 0.0, 1.0))
    outcomes = outcome_distribution(0.5, row0, row1, blank_only)
    table = {(o.symbol, o.message): (o.probability, o.posterior) for o in outcomes}
    assert set(table) == {(0, sd.BLANK), (1, sd.BLANK), (2, sd.BLANK)}
    assert table[(0, sd.BLANK)] == (0.25, 1.0)
    assert table[(1, sd.BLANK)] == (0.5, 0.5)
    assert table[(2, sd.BLANK)] == (0.25, 0.0)


def test_zero_probability_outcomes_are_pruned():
    outcomes = outcome_distribution(0.5, (1.0, 0.0), (1.0, 0.0))
    assert [o.symbol for o in outcomes] == [0]
    assert outcomes[0].probability == 1.0
