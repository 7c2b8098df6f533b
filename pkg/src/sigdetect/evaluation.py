"""Ground-truth evaluation of policy pairs.

Three routes to the same expected cost, in decreasing order of authority:

* ``exact_cost`` -- enumerate every positive-probability joint observation
  path, roll both policies forward under the message semantics (decisions
  at step t see the peer's actions through t-1; simultaneous stops resolve
  to observer 2), and sum probability-weighted cost breakdowns.  Exact up
  to floating point, and exactly exact when the scenario data are dyadic.
* ``simulate`` -- seeded Monte Carlo estimate of the same quantity.
* ``brute_force_global`` / ``brute_force_best_response`` -- exhaustive
  search over all deterministic history policies, evaluated by the exact
  roller.  Feasible only on tiny instances; exists to certify the dynamic
  program against an implementation with no shared machinery.

The brute-force policy order is lexicographic over the sorted decision
keys with actions ordered declare-0 < declare-1 < blank, and ties in cost
keep the earliest policy, so results are deterministic regardless of
chunking or the worker count (``SIGDETECT_THREADS``).
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .policies import (
    ACTIVE,
    BLANK,
    HistoryPolicy,
    PolicyFormatError,
    admissible_actions,
    decision_keys,
)
from .scenario import Scenario

PROBABILITY_SUM_TOL = 1e-12
DEFAULT_SIZE_LIMIT = 10**7
_TABLE_MODE_LIMIT = 10**6
_PARALLEL_MIN_COUNT = 1000


class PolicySpaceTooLargeError(ValueError):
    def __init__(self, count: int, limit: int):
        super().__init__(
            f"policy space has {count} members, above the size limit {limit}"
        )
        self.count = count
        self.limit = limit


@dataclasses.dataclass(frozen=True)
class CostBreakdown:
    """Realized cost of one joint path under one hypothesis."""

    tau1: int
    tau2: int
    last_decider: int
    operating_cost: float
    terminal_cost: float

    @property
    def tau_min(self) -> int:
        return min(self.tau1, self.tau2)

    @property
    def tau_max(self) -> int:
        return max(self.tau1, self.tau2)

    @property
    def total(self) -> float:
        return self.operating_cost + self.terminal_cost


@dataclasses.dataclass(frozen=True)
class PathOutcome:
    """One trace row: a hypothesis, a joint symbol path, and its cost."""

    hypothesis: int
    path1: tuple
    path2: tuple
    probability: float
    breakdown: CostBreakdown


@dataclasses.dataclass(frozen=True)
class SimResult:
    mean: float
    std: float
    count: int
    seed: int
    half_width: float


# ---------------------------------------------------------------------------
# the exact roller


def _roll_pair(scenario: Scenario, p1: HistoryPolicy, p2: HistoryPolicy, path1, path2):
    """Stopping times and declarations on one joint symbol path.

    Both observers' step-t actions are computed before either is applied:
    a stop at t becomes visible to the peer only from t+1 on.
    """
    policies = (p1, p2)
    paths = (path1, path2)
    stop = [None, None]
    for t in range(1, scenario.horizon + 1):
        acts = [None, None]
        for i in (0, 1):
            if stop[i] is None:
                peer_stop = stop[1 - i]
                status = ACTIVE if peer_stop is None else peer_stop
                a = policies[i].action_at(t, paths[i][:t], status)
                if a == BLANK and t == scenario.horizon:
                    raise PolicyFormatError(
                        f"observer {i + 1} policy sends a blank at the horizon "
                        f"(t={t}, prefix={paths[i][:t]}); the last step must declare"
                    )
                acts[i] = a
        for i in (0, 1):
            if acts[i] is not None and acts[i] != BLANK:
                stop[i] = (t, acts[i])
        if stop[0] is not None and stop[1] is not None:
            break
    (tau1, u1), (tau2, u2) = stop
    return tau1, u1, tau2, u2


def _breakdown(scenario: Scenario, rolled, h: int) -> CostBreakdown:
    tau1, u1, tau2, u2 = rolled
    tau_min = min(tau1, tau2)
    tau_max = max(tau1, tau2)
    last = 1 if tau2 < tau1 else 2
    final = u1 if last == 1 else u2
    operating = scenario.cost_both_active * (tau_min - 1) + scenario.cost_one_active * (
        tau_max - tau_min
    )
    return CostBreakdown(
        tau1=tau1,
        tau2=tau2,
        last_decider=last,
        operating_cost=operating,
        terminal_cost=scenario.terminal_cost[final][h],
    )


def _positive_paths(scenario: Scenario, observer: int):
    """Full-horizon symbol paths with positive mass under some hypothesis.

    Returned in lexicographic order as (path, mass under h0, mass under h1).
    """
    model = scenario.observers[observer - 1]
    paths = [((), 1.0, 1.0)]
    for t in range(1, scenario.horizon + 1):
        row0, row1 = model.likelihood[t - 1]
        extended = []
        for path, q0, q1 in paths:
            for y in range(model.alphabet_size):
                e0, e1 = q0 * row0[y], q1 * row1[y]
                if e0 > 0.0 or e1 > 0.0:
                    extended.append((path + (y,), e0, e1))
        paths = extended
    return paths


def _check_pair(p1: HistoryPolicy, p2: HistoryPolicy):
    if p1.observer != 1 or p2.observer != 2:
        raise ValueError(
            f"expected policies for observers 1 and 2, got {p1.observer} and {p2.observer}"
        )


def exact_cost(scenario: Scenario, p1: HistoryPolicy, p2: HistoryPolicy, want_trace=False):
    """Exact expected cost of a policy pair, optionally with a full trace."""
    _check_pair(p1, p2)
    paths1 = _positive_paths(scenario, 1)
    paths2 = _positive_paths(scenario, 2)
    p0 = scenario.prior_h0
    total = 0.0
    total_prob = 0.0
    trace = [] if want_trace else None
    for path1, a0, a1 in paths1:
        for path2, b0, b1 in paths2:
            q0 = p0 * a0 * b0
            q1 = (1.0 - p0) * a1 * b1
            total_prob += q0 + q1
            if q0 == 0.0 and q1 == 0.0:
                continue
            rolled = _roll_pair(scenario, p1, p2, path1, path2)
            for h, q in ((0, q0), (1, q1)):
                if q == 0.0:
                    continue
                breakdown = _breakdown(scenario, rolled, h)
                total += q * breakdown.total
                if want_trace:
                    trace.append(PathOutcome(h, path1, path2, q, breakdown))
    if abs(total_prob - 1.0) > PROBABILITY_SUM_TOL:
        raise AssertionError(
            f"joint path probabilities sum to {total_prob!r}, not 1; "
            "scenario likelihoods are inconsistent"
        )
    return total, (tuple(trace) if want_trace else None)


# ---------------------------------------------------------------------------
# Monte Carlo


def simulate(scenario: Scenario, p1: HistoryPolicy, p2: HistoryPolicy, n: int, seed: int) -> SimResult:
    """Seeded Monte Carlo estimate of the pair's expected cost.

    Draw order is fixed -- hypothesis uniforms first, then one uniform
    batch per (step, observer) pair in step order -- so identical inputs
    reproduce identical output.  Costs come from a precomputed table over
    positive-probability joint paths when that table is small enough, and
    from rolling sampled paths individually otherwise.
    """
    _check_pair(p1, p2)
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n!r}")
    rng = np.random.default_rng(seed)
    hyp = (rng.random(n) >= scenario.prior_h0).astype(np.int64)

    horizon = scenario.horizon
    globals_ = [np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)]
    strides = []
    for i in (0, 1):
        model = scenario.observers[i]
        strides.append(model.alphabet_size ** np.arange(horizon - 1, -1, -1))
    for t in range(1, horizon + 1):
        for i in (0, 1):
            model = scenario.observers[i]
            row0, row1 = model.likelihood[t - 1]
            cum0 = np.cumsum(row0)
            cum1 = np.cumsum(row1)
            u = rng.random(n)
            sym0 = np.searchsorted(cum0, u, side="right")
            sym1 = np.searchsorted(cum1, u, side="right")
            sym = np.where(hyp == 0, sym0, sym1)
            sym = np.minimum(sym, model.alphabet_size - 1)
            globals_[i] += sym * strides[i][t - 1]

    paths1 = _positive_paths(scenario, 1)
    paths2 = _positive_paths(scenario, 2)
    if len(paths1) * len(paths2) <= _TABLE_MODE_LIMIT:
        costs = _table_mode_costs(scenario, p1, p2, paths1, paths2, strides, globals_, hyp)
    else:
        costs = _per_sample_costs(scenario, p1, p2, globals_, hyp)

    mean = float(np.mean(costs))
    std = float(np.std(costs, ddof=1)) if n > 1 else 0.0
    half_width = 1.96 * std / float(np.sqrt(n))
    return SimResult(mean=mean, std=std, count=n, seed=seed, half_width=half_width)


def _table_mode_costs(scenario, p1, p2, paths1, paths2, strides, globals_, hyp):
    keys1 = np.array([int(np.dot(path, strides[0])) for path, _q0, _q1 in paths1])
    keys2 = np.array([int(np.dot(path, strides[1])) for path, _q0, _q1 in paths2])
    table = np.empty((2, len(paths1), len(paths2)))
    for i, (path1, _a0, _a1) in enumerate(paths1):
        for j, (path2, _b0, _b1) in enumerate(paths2):
            rolled = _roll_pair(scenario, p1, p2, path1, path2)
            table[0, i, j] = _breakdown(scenario, rolled, 0).total
            table[1, i, j] = _breakdown(scenario, rolled, 1).total
    loc1 = np.searchsorted(keys1, globals_[0])
    loc2 = np.searchsorted(keys2, globals_[1])
    ok = (
        (loc1 < len(keys1))
        & (loc2 < len(keys2))
        & (keys1[np.minimum(loc1, len(keys1) - 1)] == globals_[0])
        & (keys2[np.minimum(loc2, len(keys2) - 1)] == globals_[1])
    )
    if not bool(np.all(ok)):
        raise RuntimeError("sampled a joint path outside the positive-probability set")
    return table[hyp, loc1, loc2]


def _per_sample_costs(scenario, p1, p2, globals_, hyp):
    n = len(hyp)
    costs = np.empty(n)
    cache = {}
    alphabet = [scenario.observers[0].alphabet_size, scenario.observers[1].alphabet_size]
    for idx in range(n):
        key = (int(globals_[0][idx]), int(globals_[1][idx]))
        rolled = cache.get(key)
        if rolled is None:
            paths = []
            for i in (0, 1):
                digits = []
                g = key[i]
                for _ in range(scenario.horizon):
                    g, d = divmod(g, alphabet[i])
                    digits.append(d)
                paths.append(tuple(reversed(digits)))
            rolled = _roll_pair(scenario, p1, p2, paths[0], paths[1])
            cache[key] = rolled
        costs[idx] = _breakdown(scenario, rolled, int(hyp[idx])).total
    return costs


# ---------------------------------------------------------------------------
# brute-force policy search


def policy_count(scenario: Scenario, observer: int) -> int:
    """Number of deterministic history policies over the decision keys."""
    count = 1
    for t, _prefix, _status in decision_keys(scenario, observer):
        count *= len(admissible_actions(t, scenario.horizon))
    return count


def _policy_from_index(scenario, observer, keys, index) -> HistoryPolicy:
    mapping = {}
    for key in reversed(keys):
        actions = admissible_actions(key[0], scenario.horizon)
        index, digit = divmod(index, len(actions))
        mapping[key] = actions[digit]
    return HistoryPolicy.from_mapping(observer, mapping)


def enumerate_policies(scenario: Scenario, observer: int):
    """Yield every deterministic policy in lexicographic order."""
    keys = decision_keys(scenario, observer)
    for index in range(policy_count(scenario, observer)):
        yield _policy_from_index(scenario, observer, keys, index)


def _pair_cost(scenario, combos, p1, p2) -> float:
    total = 0.0
    penalty = scenario.terminal_cost
    for path1, path2, q0, q1 in combos:
        tau1, u1, tau2, u2 = _roll_pair(scenario, p1, p2, path1, path2)
        tau_min, tau_max = (tau1, tau2) if tau1 <= tau2 else (tau2, tau1)
        final = u1 if tau2 < tau1 else u2
        operating = scenario.cost_both_active * (tau_min - 1) + scenario.cost_one_active * (
            tau_max - tau_min
        )
        total += q0 * (operating + penalty[final][0]) + q1 * (operating + penalty[final][1])
    return total


def _joint_combos(scenario: Scenario):
    p0 = scenario.prior_h0
    combos = []
    total_prob = 0.0
    for path1, a0, a1 in _positive_paths(scenario, 1):
        for path2, b0, b1 in _positive_paths(scenario, 2):
            q0 = p0 * a0 * b0
            q1 = (1.0 - p0) * a1 * b1
            total_prob += q0 + q1
            if q0 > 0.0 or q1 > 0.0:
                combos.append((path1, path2, q0, q1))
    if abs(total_prob - 1.0) > PROBABILITY_SUM_TOL:
        raise AssertionError(
            f"joint path probabilities sum to {total_prob!r}, not 1"
        )
    return combos


def _max_workers() -> int:
    raw = os.environ.get("SIGDETECT_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"SIGDETECT_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


def _response_chunk(scenario, peer, which_observer, start, stop):
    """Best (cost, index) over one index range of same-side policies."""
    keys = decision_keys(scenario, which_observer)
    combos = _joint_combos(scenario)
    best = (float("inf"), -1)
    for index in range(start, stop):
        mine = _policy_from_index(scenario, which_observer, keys, index)
        pair = (mine, peer) if which_observer == 1 else (peer, mine)
        cost = _pair_cost(scenario, combos, *pair)
        if cost < best[0]:
            best = (cost, index)
    return best


def _global_chunk(scenario, start1, stop1):
    """Best (cost, (i1, i2)) over an observer-1 index range, all observer 2."""
    keys1 = decision_keys(scenario, 1)
    keys2 = decision_keys(scenario, 2)
    count2 = policy_count(scenario, 2)
    combos = _joint_combos(scenario)
    best = (float("inf"), (-1, -1))
    for i1 in range(start1, stop1):
        p1 = _policy_from_index(scenario, 1, keys1, i1)
        for i2 in range(count2):
            p2 = _policy_from_index(scenario, 2, keys2, i2)
            cost = _pair_cost(scenario, combos, p1, p2)
            if cost < best[0]:
                best = (cost, (i1, i2))
    return best


def _run_chunks(worker, fixed_args, start, stop):
    workers = _max_workers()
    if workers <= 1 or stop - start < _PARALLEL_MIN_COUNT:
        return worker(*fixed_args, start, stop)
    bounds = np.linspace(start, stop, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(worker, *fixed_args, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        results = [f.result() for f in futures]
    return min(results)


def brute_force_best_response(
    scenario: Scenario,
    peer: HistoryPolicy,
    which_observer: int,
    size_limit: int = DEFAULT_SIZE_LIMIT,
):
    """Exhaustive best response on one side; the oracle for the solver.

    Returns ``(policy, cost)`` minimizing the exact pair cost, ties going
    to the lexicographically earliest policy.
    """
    if which_observer not in (1, 2):
        raise ValueError(f"which_observer must be 1 or 2, got {which_observer!r}")
    if peer.observer != 3 - which_observer:
        raise ValueError(
            f"peer policy belongs to observer {peer.observer}; "
            f"observer {which_observer} needs observer {3 - which_observer}"
        )
    count = policy_count(scenario, which_observer)
    if count > size_limit:
        raise PolicySpaceTooLargeError(count, size_limit)
    cost, index = _run_chunks(_response_chunk, (scenario, peer, which_observer), 0, count)
    keys = decision_keys(scenario, which_observer)
    return _policy_from_index(scenario, which_observer, keys, index), cost


def brute_force_global(scenario: Scenario, size_limit: int = DEFAULT_SIZE_LIMIT):
    """Exhaustive search over joint policy pairs on a tiny instance."""
    count1 = policy_count(scenario, 1)
    count2 = policy_count(scenario, 2)
    if count1 * count2 > size_limit:
        raise PolicySpaceTooLargeError(count1 * count2, size_limit)
    cost, (i1, i2) = _run_chunks(_global_chunk, (scenario,), 0, count1)
    keys1 = decision_keys(scenario, 1)
    keys2 = decision_keys(scenario, 2)
    p1 = _policy_from_index(scenario, 1, keys1, i1)
    p2 = _policy_from_index(scenario, 2, keys2, i2)
    return p1, p2, cost
