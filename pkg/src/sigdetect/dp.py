"""Backward-induction value functions and best responses against a fixed peer.

The information state of an observer is ``(t, belief, phase)``: the time
step, the posterior it assigns to hypothesis 0, and whether the peer has
already stopped (``a=1``) or is still active (``a=0``).  Against a fixed
peer policy the optimal cost-to-go satisfies a two-phase recursion: in the
one-active phase the observer plays a classical stopping problem (pay k to
see one more symbol, or declare); in the both-active phase every candidate
folds in what the peer's next action will reveal and cost, via the tables
from :mod:`sigdetect.signaling`.

Internally everything is computed in *mass-weighted* form: instead of a
normalized belief the recursion carries the pair ``(v0, v1)`` of joint
probabilities of (hypothesis, information so far).  The recursion is then
division-free -- only sums and products of scenario probabilities and
costs -- so on instances whose data are exactly representable (dyadic
probabilities, small rationals) every expected cost comes out exact, which
is what lets the solver be compared bit-for-bit against brute-force policy
enumeration.  Values and argmin actions at a normalized belief divide once
at the query boundary and nowhere else.

Candidates are always ordered (declare 0, declare 1, continue) and ties
resolve to the earliest -- the one fixed tie-break used everywhere, so
extracted policies and dumped tables are stable across runs.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from . import signaling
from .policies import (
    ACTIVE,
    BLANK,
    DECLARE_0,
    DECLARE_1,
    HistoryPolicy,
    IntervalPolicy,
    blank_until_horizon_policy,
    decision_keys,
)
from .scenario import Scenario


class RegionBoundViolation(RuntimeError):
    """Threshold extraction found more action regions than can exist.

    The interval structure of best responses is a theorem, not a tuning
    knob, so exceeding the bound means the implementation (or the oracle
    it was fed) is wrong; it is deliberately a hard error.
    """

    def __init__(self, t: int, a: int, regions: int, bound: int):
        super().__init__(
            f"value function at t={t}, a={a} has {regions} action regions; "
            f"at most {bound} are possible"
        )
        self.t = t
        self.a = a
        self.regions = regions
        self.bound = bound


@dataclasses.dataclass(frozen=True, eq=False)
class ValueGrid:
    """Value function sampled on a uniform belief grid at one (t, a)."""

    t: int
    a: int
    beliefs: np.ndarray
    values: np.ndarray
    actions: np.ndarray
    candidates: tuple  # (declare-0 values, declare-1 values, continue or None)


@dataclasses.dataclass(frozen=True)
class ConcavityCell:
    t: int
    a: int
    min_second_difference: float
    passed: bool


@dataclasses.dataclass(frozen=True)
class ConcavityReport:
    """Grid check that every value function is concave in the belief.

    ``min_second_difference`` is the smallest centered concavity gap
    ``2 v(x) - v(x-h) - v(x+h)`` over the grid, oriented so that a concave
    function is non-negative; a cell passes when no gap dips below
    ``-tol * max(1, |v|_max)``.
    """

    resolution: float
    tol: float
    cells: tuple

    @property
    def ok(self) -> bool:
        return all(cell.passed for cell in self.cells)


def _pick(candidates):
    """Min value and argmin action over (stop-0, stop-1, continue|None)."""
    best_value = candidates[0]
    best_action = DECLARE_0
    if candidates[1] < best_value:
        best_value = candidates[1]
        best_action = DECLARE_1
    if candidates[2] is not None and candidates[2] < best_value:
        best_value = candidates[2]
        best_action = BLANK
    return best_value, best_action


class ValueOracle:
    """Value functions for one observer against a fixed peer policy.

    Exact scalar queries (``value_at``, ``candidate_values``,
    ``expected_cost``, ``greedy_history_policy``) share memoized
    mass-weighted recursions; ``value_grid`` runs the same recursion
    vectorized over a belief grid for dumps, threshold extraction and
    concavity checks.  All caches are plain dicts filled with
    deterministic values, so concurrent readers see the same numbers as
    serial execution.
    """

    def __init__(self, scenario: Scenario, which_observer: int, peer: HistoryPolicy):
        self.scenario = scenario
        self.which_observer = which_observer
        self.peer = peer
        self.messages = signaling.message_likelihoods(scenario, peer, which_observer)
        self.stops = signaling.stop_side_table(scenario, peer, which_observer)
        self._own = scenario.observers[which_observer - 1]
        self._penalty = scenario.terminal_cost
        self._memo_active = {}
        self._memo_alone = {}
        self._memo_public = {}
        self._expected_cost = None
        self._greedy = None

    # -- mass-weighted scalar recursion ------------------------------------

    def _candidates_alone(self, t, w0, w1):
        j = self._penalty
        stop0 = w0 * j[0][0] + w1 * j[0][1]
        stop1 = w0 * j[1][0] + w1 * j[1][1]
        if t == self.scenario.horizon:
            return (stop0, stop1, None)
        row0, row1 = self._own.likelihood[t]
        cont = self.scenario.cost_one_active * (w0 + w1)
        for y in range(self._own.alphabet_size):
            cont += self._value_alone(t + 1, w0 * row0[y], w1 * row1[y])
        return (stop0, stop1, cont)

    def _value_alone(self, t, w0, w1):
        if w0 == 0.0 and w1 == 0.0:
            return 0.0
        key = (t, w0, w1)
        hit = self._memo_alone.get(key)
        if hit is None:
            hit = _pick(self._candidates_alone(t, w0, w1))[0]
            self._memo_alone[key] = hit
        return hit

    def _candidates_active(self, t, v0, v1):
        x0 = self.stops.mass_row(t, 0)
        x1 = self.stops.mass_row(t, 1)
        stop0 = v0 * x0[0] + v1 * x1[0]
        stop1 = v0 * x0[1] + v1 * x1[1]
        if t == self.scenario.horizon:
            return (stop0, stop1, None)
        n0 = self.messages.mass_row(t, 0)
        n1 = self.messages.mass_row(t, 1)
        k = self.scenario.cost_one_active
        row0, row1 = self._own.likelihood[t]
        cont = 0.0
        for y in range(self._own.alphabet_size):
            e0 = v0 * row0[y]
            e1 = v1 * row1[y]
            for u in (DECLARE_0, DECLARE_1):
                w0 = e0 * n0[u]
                w1 = e1 * n1[u]
                if w0 != 0.0 or w1 != 0.0:
                    cont += k * (w0 + w1) + self._value_alone(t + 1, w0, w1)
            b0 = e0 * n0[BLANK]
            b1 = e1 * n1[BLANK]
            if b0 != 0.0 or b1 != 0.0:
                cont += self.scenario.cost_both_active * (b0 + b1)
                cont += self._value_active(t + 1, e0, e1)
        return (stop0, stop1, cont)

    def _value_active(self, t, v0, v1):
        if v0 == 0.0 and v1 == 0.0:
            return 0.0
        key = (t, v0, v1)
        hit = self._memo_active.get(key)
        if hit is None:
            hit = _pick(self._candidates_active(t, v0, v1))[0]
            self._memo_active[key] = hit
        return hit

    # -- public queries at a normalized belief -----------------------------

    def _check_state(self, t, pi, a):
        if not 1 <= t <= self.scenario.horizon:
            raise ValueError(f"t={t!r} outside 1..{self.scenario.horizon}")
        if not 0.0 <= pi <= 1.0:
            raise ValueError(f"belief {pi!r} outside [0, 1]")
        if a not in (0, 1):
            raise ValueError(f"phase must be 0 or 1, got {a!r}")

    def _masses_active(self, t, pi):
        # Weights chosen so the joint mass of (hypothesis h, peer blank so
        # far) is exactly pi_h.  Where the peer cannot have stayed blank
        # under h, a belief that still puts mass there is inconsistent;
        # that mass is dropped and the value weights the feasible
        # hypothesis only.
        r0 = self.messages.reach(t, 0)
        r1 = self.messages.reach(t, 1)
        v0 = pi / r0 if r0 > 0.0 else 0.0
        v1 = (1.0 - pi) / r1 if r1 > 0.0 else 0.0
        return v0, v1

    def candidate_values(self, t: int, pi: float, a: int) -> tuple:
        """(declare-0, declare-1, continue) costs; continue is None at T."""
        self._check_state(t, pi, a)
        if a == 1:
            return self._candidates_alone(t, pi, 1.0 - pi)
        return self._candidates_active(t, *self._masses_active(t, pi))

    def value_at(self, t: int, pi: float, a: int) -> tuple:
        """Optimal cost and argmin action at an information state."""
        self._check_state(t, pi, a)
        key = (t, pi, a)
        hit = self._memo_public.get(key)
        if hit is None:
            hit = _pick(self.candidate_values(t, pi, a))
            self._memo_public[key] = hit
        return hit

    def expected_cost(self) -> float:
        """Expected total cost of the best response from the start."""
        if self._expected_cost is None:
            p0 = self.scenario.prior_h0
            row0, row1 = self._own.likelihood[0]
            total = 0.0
            for y in range(self._own.alphabet_size):
                total += self._value_active(1, p0 * row0[y], (1.0 - p0) * row1[y])
            self._expected_cost = total
        return self._expected_cost

    def greedy_history_policy(self) -> HistoryPolicy:
        """Materialize the best response as an explicit decision table.

        Every decision key is scored in mass-weighted form (prior times
        own-prefix likelihood, times the peer-message mass when the peer
        has stopped), so the actions agree exactly with the recursion that
        produced ``expected_cost``.
        """
        if self._greedy is not None:
            return self._greedy
        prior = (self.scenario.prior_h0, 1.0 - self.scenario.prior_h0)
        rules = {}
        for key in decision_keys(self.scenario, self.which_observer):
            t, prefix, status = key
            m0, m1 = prior
            for step, y in enumerate(prefix):
                row0, row1 = self._own.likelihood[step]
                m0, m1 = m0 * row0[y], m1 * row1[y]
            if status == ACTIVE:
                cands = self._candidates_active(t, m0, m1)
            else:
                s, u = status
                n0 = self.messages.mass_row(s, 0)[u]
                n1 = self.messages.mass_row(s, 1)[u]
                cands = self._candidates_alone(t, m0 * n0, m1 * n1)
            rules[key] = _pick(cands)[1]
        self._greedy = HistoryPolicy.from_mapping(self.which_observer, rules)
        return self._greedy

    # -- vectorized grid sweep ----------------------------------------------

    def _grid_value_alone(self, t, w0, w1):
        s0, s1, cont = self._grid_candidates_alone(t, w0, w1)
        value = np.minimum(s0, s1)
        if cont is not None:
            value = np.minimum(value, cont)
        return value

    def _grid_candidates_alone(self, t, w0, w1):
        j = self._penalty
        stop0 = w0 * j[0][0] + w1 * j[0][1]
        stop1 = w0 * j[1][0] + w1 * j[1][1]
        if t == self.scenario.horizon:
            return (stop0, stop1, None)
        row0, row1 = self._own.likelihood[t]
        cont = self.scenario.cost_one_active * (w0 + w1)
        for y in range(self._own.alphabet_size):
            cont = cont + self._grid_value_alone(t + 1, w0 * row0[y], w1 * row1[y])
        return (stop0, stop1, cont)

    def _grid_value_active(self, t, v0, v1):
        s0, s1, cont = self._grid_candidates_active(t, v0, v1)
        value = np.minimum(s0, s1)
        if cont is not None:
            value = np.minimum(value, cont)
        return value

    def _grid_candidates_active(self, t, v0, v1):
        x0 = self.stops.mass_row(t, 0)
        x1 = self.stops.mass_row(t, 1)
        stop0 = v0 * x0[0] + v1 * x1[0]
        stop1 = v0 * x0[1] + v1 * x1[1]
        if t == self.scenario.horizon:
            return (stop0, stop1, None)
        n0 = self.messages.mass_row(t, 0)
        n1 = self.messages.mass_row(t, 1)
        k = self.scenario.cost_one_active
        row0, row1 = self._own.likelihood[t]
        cont = 0.0
        for y in range(self._own.alphabet_size):
            e0 = v0 * row0[y]
            e1 = v1 * row1[y]
            for u in (DECLARE_0, DECLARE_1):
                w0 = e0 * n0[u]
                w1 = e1 * n1[u]
                cont = cont + (k * (w0 + w1) + self._grid_value_alone(t + 1, w0, w1))
            b0 = e0 * n0[BLANK]
            b1 = e1 * n1[BLANK]
            cont = cont + self.scenario.cost_both_active * (b0 + b1)
            cont = cont + self._grid_value_active(t + 1, e0, e1)
        return (stop0, stop1, cont)

    def value_grid(self, t: int, a: int, resolution: float = 1e-3) -> ValueGrid:
        """Sample values, actions and candidates on a uniform belief grid.

        Runs the identical arithmetic as the scalar queries, elementwise
        over the grid, so sampled values match ``value_at`` bit for bit.
        """
        self._check_state(t, 0.5, a)
        steps = int(round(1.0 / resolution))
        if steps < 1:
            raise ValueError(f"resolution {resolution!r} coarser than the unit interval")
        beliefs = np.linspace(0.0, 1.0, steps + 1)
        if a == 1:
            cands = self._grid_candidates_alone(t, beliefs, 1.0 - beliefs)
        else:
            r0 = self.messages.reach(t, 0)
            r1 = self.messages.reach(t, 1)
            v0 = beliefs / r0 if r0 > 0.0 else np.zeros_like(beliefs)
            v1 = (1.0 - beliefs) / r1 if r1 > 0.0 else np.zeros_like(beliefs)
            cands = self._grid_candidates_active(t, v0, v1)
        stacked = np.stack([c for c in cands if c is not None])
        values = stacked.min(axis=0)
        actions = stacked.argmin(axis=0)  # first occurrence wins: the tie-break
        return ValueGrid(t=t, a=a, beliefs=beliefs, values=values, actions=actions, candidates=cands)


def extract_thresholds(
    oracle: ValueOracle,
    t: int,
    a: int,
    resolution: float = 1e-3,
    refine_tol: float = 1e-10,
) -> tuple:
    """Recover the interval structure of the argmin action at one (t, a).

    Samples the action on a uniform grid, merges runs, then bisects each
    run boundary (60 halvings, far below ``refine_tol`` on [0,1]) to
    locate the switch point.  Returns a tuple of ``(lo, hi, action)``
    intervals tiling [0,1].  Regions narrower than ``resolution`` are
    invisible to this procedure by construction.
    """
    if not 0.0 < resolution <= 1e-2:
        raise ValueError(f"resolution must be in (0, 1e-2], got {resolution!r}")
    if refine_tol <= 0.0:
        raise ValueError(f"refine_tol must be positive, got {refine_tol!r}")
    grid = oracle.value_grid(t, a, resolution)
    actions = grid.actions
    runs = []  # (action, first index, last index)
    for i, action in enumerate(actions):
        if runs and runs[-1][0] == action:
            runs[-1][2] = i
        else:
            runs.append([int(action), i, i])
    bound = 2 if t == oracle.scenario.horizon else (3 if a == 1 else 5)
    if len(runs) > bound:
        raise RegionBoundViolation(t, a, len(runs), bound)

    boundaries = []
    beliefs = grid.beliefs
    for left, right in zip(runs, runs[1:]):
        lo = float(beliefs[left[2]])
        hi = float(beliefs[right[1]])
        for _ in range(60):
            if hi - lo <= refine_tol:
                break
            mid = 0.5 * (lo + hi)
            if oracle.value_at(t, mid, a)[1] == left[0]:
                lo = mid
            else:
                hi = mid
        boundaries.append(0.5 * (lo + hi))

    intervals = []
    lo = 0.0
    for run, boundary in zip(runs, boundaries):
        intervals.append((lo, boundary, run[0]))
        lo = boundary
    intervals.append((lo, 1.0, runs[-1][0]))
    return tuple(intervals)


def best_response(
    scenario: Scenario,
    peer: HistoryPolicy,
    which_observer: int,
    resolution: float = 1e-3,
    refine_tol: float = 1e-10,
):
    """Optimal policy against a fixed peer: oracle, interval form, cost."""
    oracle = ValueOracle(scenario, which_observer, peer)
    unreachable = [
        (t, h)
        for t in range(1, scenario.horizon + 1)
        for h in (0, 1)
        if oracle.messages.reach(t, h) == 0.0
    ]
    if unreachable:
        warnings.warn(
            f"peer policy makes some joint histories unreachable {unreachable}; "
            "grid values there weight the feasible hypothesis only",
            stacklevel=2,
        )
    rows = []
    for t in range(1, scenario.horizon + 1):
        for a in (0, 1):
            rows.append(((t, a), extract_thresholds(oracle, t, a, resolution, refine_tol)))
    interval_policy = IntervalPolicy(observer=which_observer, rows=tuple(rows))
    return oracle, interval_policy, oracle.expected_cost()


@dataclasses.dataclass(frozen=True)
class IterationRound:
    """Costs after each observer's best response within one round."""

    round_index: int
    cost_after_obs2: float
    cost_after_obs1: float


def person_by_person(
    scenario: Scenario,
    init_o1: HistoryPolicy = None,
    max_iters: int = 50,
    tol: float = 1e-8,
):
    """Alternate best responses until neither observer improves.

    Each round recomputes observer 2's best response to the current
    observer-1 policy and then observer 1's best response to that.  The
    interleaved cost sequence is non-increasing because every best
    response may keep the incumbent policy.  Stops when a full round
    improves the cost by less than ``tol``.  The result is person-by-person
    stable at the resolution of ``tol``: a unilateral deviation cannot
    help, but no claim of team optimality is made.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters!r}")
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    policy1 = init_o1 if init_o1 is not None else blank_until_horizon_policy(scenario, 1)
    policy2 = None
    trace = []
    previous = None
    for round_index in range(1, max_iters + 1):
        oracle2 = ValueOracle(scenario, 2, policy1)
        cost2 = oracle2.expected_cost()
        policy2 = oracle2.greedy_history_policy()
        oracle1 = ValueOracle(scenario, 1, policy2)
        cost1 = oracle1.expected_cost()
        policy1 = oracle1.greedy_history_policy()
        trace.append(IterationRound(round_index, cost2, cost1))
        improvement = (cost2 - cost1) if previous is None else (previous - cost1)
        previous = cost1
        if improvement < tol:
            break
    return (policy1, policy2), tuple(trace)


def check_concavity(
    oracle: ValueOracle, resolution: float = 1e-3, tol: float = 1e-8
) -> ConcavityReport:
    """Verify each value function is concave on a belief grid.

    Values are mins of affine stop terms and a continue term that is a
    nonnegative combination of later values, so exact concavity in the
    belief is inherited backward from the horizon; this check catches
    implementation errors, not numerical ones, hence the tight default
    tolerance.
    """
    steps = int(round(1.0 / resolution))
    if steps < 10:
        raise ValueError(f"resolution {resolution!r} gives fewer than 10 grid points")
    cells = []
    for t in range(1, oracle.scenario.horizon + 1):
        for a in (0, 1):
            values = oracle.value_grid(t, a, resolution).values
            gaps = 2.0 * values[1:-1] - values[:-2] - values[2:]
            min_gap = float(gaps.min())
            scale = max(1.0, float(np.max(np.abs(values))))
            cells.append(ConcavityCell(t, a, min_gap, min_gap >= -tol * scale))
    return ConcavityReport(resolution=resolution, tol=tol, cells=tuple(cells))
