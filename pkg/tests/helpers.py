"""Seeded generators shared by the unit and acceptance tests.

Everything here takes an explicit numpy Generator so each test controls
its own stream; no module-level randomness.
"""

import sigdetect as sd


def random_observation_model(rng, alphabet, horizon, floor=0.05):
    rows = []
    for _ in range(horizon):
        per_h = []
        for _h in (0, 1):
            weights = rng.random(alphabet) + floor
            weights = weights / weights.sum()
            per_h.append(tuple(float(w) for w in weights))
        rows.append(tuple(per_h))
    return sd.ObservationModel(alphabet_size=alphabet, likelihood=tuple(rows))


def random_scenario(rng, max_horizon=4, max_alphabet=3):
    """A valid scenario with full-support rows and well-separated costs."""
    horizon = int(rng.integers(1, max_horizon + 1))
    observers = tuple(
        random_observation_model(rng, int(rng.integers(2, max_alphabet + 1)), horizon)
        for _ in range(2)
    )
    both = float(rng.uniform(1.05, 2.5))
    one = both * float(rng.uniform(0.2, 0.95))
    mistake_01 = float(rng.uniform(2.5 * both, 10.0))
    mistake_10 = float(rng.uniform(2.5 * both, 10.0))
    return sd.Scenario(
        prior_h0=float(rng.uniform(0.15, 0.85)),
        horizon=horizon,
        cost_both_active=both,
        cost_one_active=one,
        terminal_cost=((0.0, mistake_01), (mistake_10, 0.0)),
        observers=observers,
    )


def random_history_policy(rng, scenario, observer):
    mapping = {}
    for t, prefix, status in sd.decision_keys(scenario, observer):
        choices = sd.admissible_actions(t, scenario.horizon)
        mapping[(t, prefix, status)] = int(choices[rng.integers(0, len(choices))])
    return sd.HistoryPolicy.from_mapping(observer, mapping)
