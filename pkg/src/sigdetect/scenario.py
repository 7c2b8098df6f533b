"""Problem instances: data model, validation, serialization, builtins.

A scenario fixes everything about one detection problem: the prior on the
binary hypothesis, the horizon, the per-step operating costs (K while both
observers are active, k while exactly one is), the terminal decision
penalty matrix, and each observer's per-step finite-alphabet observation
likelihoods.  Observations are conditionally independent across time and
across observers given the hypothesis; that assumption is baked into the
factored representation rather than checked at runtime.
"""

from __future__ import annotations

import dataclasses

from . import policies, tomlio
from .policies import ACTIVE, BLANK, DECLARE_0, DECLARE_1, HistoryPolicy

ROW_SUM_TOL = 1e-12

#: Default terminal penalty for a wrong final declaration in the builtin
#: counterexample.  The construction only needs it "large enough" that a
#: deliberate mistake is never optimal; with per-step costs below 2 and
#: three steps, anything above ~10 is safely out of reach.  Overridable.
DEFAULT_MISTAKE_COST = 100.0


@dataclasses.dataclass(frozen=True)
class ObservationModel:
    """Per-time, per-hypothesis likelihood rows over a finite alphabet.

    ``likelihood[t-1][h][y]`` is the chance of symbol ``y`` at step ``t``
    when the true hypothesis is ``h``.
    """

    alphabet_size: int
    likelihood: tuple  # horizon x 2 x alphabet_size nested tuples of float


@dataclasses.dataclass(frozen=True)
class Scenario:
    prior_h0: float
    horizon: int
    cost_both_active: float
    cost_one_active: float
    terminal_cost: tuple  # 2x2, [decision][hypothesis]
    observers: tuple  # exactly two ObservationModel entries


@dataclasses.dataclass(frozen=True)
class Violation:
    path: str
    message: str


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "scenario valid"
        return "; ".join(f"{v.path}: {v.message}" for v in self.violations)


class ScenarioFormatError(ValueError):
    """Scenario document could not be parsed or has the wrong structure."""


class ScenarioValidationError(ValueError):
    """Scenario parsed fine but violates an invariant."""

    def __init__(self, report: ValidationReport):
        super().__init__(str(report))
        self.report = report


def validate_scenario(s: Scenario) -> ValidationReport:
    found = []

    def bad(path, message):
        found.append(Violation(path, message))

    if not 0.0 <= s.prior_h0 <= 1.0:
        bad("prior_h0", f"must lie in [0,1], got {s.prior_h0!r}")
    if s.horizon < 1:
        bad("horizon", f"must be >= 1, got {s.horizon!r}")
    if not s.cost_both_active > s.cost_one_active > 0.0:
        bad(
            "cost_both_active/cost_one_active",
            f"need K > k > 0, got K={s.cost_both_active!r}, k={s.cost_one_active!r}",
        )
    if len(s.terminal_cost) != 2 or any(len(row) != 2 for row in s.terminal_cost):
        bad("terminal_cost", "must be a 2x2 matrix")
    else:
        for u in (0, 1):
            for h in (0, 1):
                if s.terminal_cost[u][h] < 0.0:
                    bad(f"terminal_cost[{u}][{h}]", "must be non-negative")
        if s.terminal_cost[0][0] != 0.0 or s.terminal_cost[1][1] != 0.0:
            bad("terminal_cost", "correct decisions must cost 0")
    if len(s.observers) != 2:
        bad("observers", f"need exactly 2 observers, got {len(s.observers)}")
    for i, model in enumerate(s.observers, start=1):
        root = f"observers[{i}]"
        if model.alphabet_size < 1:
            bad(f"{root}.alphabet_size", "must be a positive integer")
        if len(model.likelihood) != s.horizon:
            bad(
                f"{root}.likelihood",
                f"need one table per step, got {len(model.likelihood)} for horizon {s.horizon}",
            )
            continue
        for t, step in enumerate(model.likelihood, start=1):
            if len(step) != 2:
                bad(f"{root}.likelihood[t={t}]", "need rows for both hypotheses")
                continue
            for h, row in enumerate(step):
                path = f"{root}.likelihood[t={t}][h={h}]"
                if len(row) != model.alphabet_size:
                    bad(path, f"row length {len(row)} != alphabet_size {model.alphabet_size}")
                    continue
                if any(p < 0.0 for p in row):
                    bad(path, "negative probability")
                if abs(sum(row) - 1.0) > ROW_SUM_TOL:
                    bad(path, f"row sums to {sum(row)!r}, not 1")
    return ValidationReport(tuple(found))


def _require_valid(s: Scenario) -> Scenario:
    report = validate_scenario(s)
    if not report.ok:
        raise ScenarioValidationError(report)
    return s


# ---------------------------------------------------------------------------
# serialization


def save_scenario(s: Scenario) -> str:
    """Emit the config document. Floats use shortest round-trippable form."""
    doc = {
        "schema": 1,
        "prior_h0": float(s.prior_h0),
        "horizon": int(s.horizon),
        "cost_both_active": float(s.cost_both_active),
        "cost_one_active": float(s.cost_one_active),
        "terminal_cost": [[float(x) for x in row] for row in s.terminal_cost],
        "observers": [
            {
                "alphabet_size": int(m.alphabet_size),
                "likelihood": [
                    [[float(p) for p in row] for row in step] for step in m.likelihood
                ],
            }
            for m in s.observers
        ],
    }
    return tomlio.dumps_document(doc)


def load_scenario(text: str) -> Scenario:
    try:
        doc = tomlio.load_document(text)
    except tomlio.DocumentFormatError as exc:
        raise ScenarioFormatError(f"unparseable scenario file: {exc}") from exc
    if doc.get("schema") != 1:
        raise ScenarioFormatError("missing or unsupported schema tag (expected schema = 1)")
    try:
        observers = tuple(
            ObservationModel(
                alphabet_size=int(entry["alphabet_size"]),
                likelihood=tuple(
                    tuple(tuple(float(p) for p in row) for row in step)
                    for step in entry["likelihood"]
                ),
            )
            for entry in doc["observers"]
        )
        s = Scenario(
            prior_h0=float(doc["prior_h0"]),
            horizon=int(doc["horizon"]),
            cost_both_active=float(doc["cost_both_active"]),
            cost_one_active=float(doc["cost_one_active"]),
            terminal_cost=tuple(tuple(float(x) for x in row) for row in doc["terminal_cost"]),
            observers=observers,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"scenario document has the wrong structure: {exc!r}") from exc
    return _require_valid(s)


# ---------------------------------------------------------------------------
# builtin instances


def builtin_counterexample(K: float, r1: float, mistake_cost: float = DEFAULT_MISTAKE_COST) -> Scenario:
    """The three-step instance on which interval rules are beaten.

    Observer 1 sees pure noise twice and then a noiseless reveal of the
    hypothesis.  Observer 2's first symbol is certain evidence with chance
    r1 (symbol 0 only under hypothesis 0, symbol 2 only under hypothesis 1)
    and uninformative otherwise; its later steps carry nothing.  Requires
    1 < K < 2 with k pinned at 1.
    """
    if not 1.0 < K < 2.0:
        raise ValueError(f"K must lie strictly inside (1, 2), got {K!r}")
    if not 0.0 < r1 < 1.0:
        raise ValueError(f"r1 must lie strictly inside (0, 1), got {r1!r}")
    if mistake_cost <= 2.0 * K:
        raise ValueError("mistake_cost too small to dominate operating costs")
    noise = ((0.5, 0.5), (0.5, 0.5))
    reveal = ((1.0, 0.0), (0.0, 1.0))
    obs1 = ObservationModel(alphabet_size=2, likelihood=(noise, noise, reveal))
    flat = ((0.0, 1.0, 0.0), (0.0, 1.0, 0.0))
    first = ((r1, 1.0 - r1, 0.0), (0.0, 1.0 - r1, r1))
    obs2 = ObservationModel(alphabet_size=3, likelihood=(first, flat, flat))
    return _require_valid(
        Scenario(
            prior_h0=0.5,
            horizon=3,
            cost_both_active=float(K),
            cost_one_active=1.0,
            terminal_cost=((0.0, float(mistake_cost)), (float(mistake_cost), 0.0)),
            observers=(obs1, obs2),
        )
    )


_TINY_VARIANTS = {
    # prior, K, k, mistake cost, obs1 steps, obs2 steps
    0: (0.5, 1.5, 1.0, 6.0,
        (((0.75, 0.25), (0.25, 0.75)), ((1.0, 0.0), (1.0, 0.0))),
        (((1.0,), (1.0,)), ((1.0,), (1.0,)))),
    1: (0.25, 2.0, 0.5, 8.0,
        (((0.5, 0.5), (0.125, 0.875)), ((1.0, 0.0), (1.0, 0.0))),
        (((1.0,), (1.0,)), ((1.0,), (1.0,)))),
    2: (0.5, 1.25, 1.0, 5.0,
        (((1.0,), (1.0,)), ((1.0,), (1.0,))),
        (((0.7, 0.3), (0.2, 0.8)), ((1.0, 0.0), (1.0, 0.0)))),
    3: (0.4, 1.5, 0.75, 4.0,
        (((0.8, 0.2), (0.3, 0.7)), ((0.6, 0.4), (0.4, 0.6))),
        (((0.9, 0.1), (0.4, 0.6)), ((1.0, 0.0), (1.0, 0.0)))),
    4: (0.6, 1.125, 1.0, 3.0,
        (((2.0 / 3.0, 1.0 / 3.0), (1.0 / 3.0, 2.0 / 3.0)), ((1.0, 0.0), (1.0, 0.0))),
        (((1.0,), (1.0,)), ((1.0,), (1.0,)))),
}


def builtin_tiny_instance(variant: int = 0) -> Scenario:
    """Two-step instances small enough for exhaustive policy search.

    Variant 0 uses only dyadic probabilities and costs, so every expected
    cost is computed without rounding; it is the fixture for the exact
    solver-vs-enumeration cross-check.  The other variants vary prior,
    costs and which observer carries information.
    """
    try:
        prior, K, k, mistake, lik1, lik2 = _TINY_VARIANTS[variant]
    except KeyError:
        raise ValueError(f"unknown tiny-instance variant {variant!r}") from None
    return _require_valid(
        Scenario(
            prior_h0=prior,
            horizon=2,
            cost_both_active=K,
            cost_one_active=k,
            terminal_cost=((0.0, mistake), (mistake, 0.0)),
            observers=(
                ObservationModel(alphabet_size=len(lik1[0][0]), likelihood=lik1),
                ObservationModel(alphabet_size=len(lik2[0][0]), likelihood=lik2),
            ),
        )
    )


# ---------------------------------------------------------------------------
# builtin policy pairs for the counterexample

POLICY_KINDS = ("ex1", "ex2", "nonthreshold")


def reference_pair_cost(kind: str, K: float, r1: float) -> float:
    """Closed-form expected cost of a builtin policy pair.

    Each pair resolves along a handful of branches of the counterexample
    (observer 2's first symbol is the only random ingredient that matters),
    so the expected costs collapse to short formulas.  Used to cross-check
    the exact evaluator and to drive the sweep's inequality flag.
    """
    if kind == "ex1":
        # informative first symbol (prob r1): observer 2 stops at once and
        # observer 1 echoes a step later; otherwise both idle one step at
        # K, observer 2 gives up at step 2, observer 1 rides to the reveal.
        return r1 * 1.0 + (1.0 - r1) * (K + 1.0)
    if kind == "ex2":
        # observer 2 always stops at step 1; observer 1 echoes certain
        # evidence (prob r1/2) at cost 1, else waits out the reveal at 2.
        return 2.0 - r1 / 2.0
    if kind == "nonthreshold":
        # the blank is certain evidence of hypothesis 0 (prob r1/2, cost
        # K); a declared 1 is certain (prob r1/2, cost 1); the fence
        # declaration forces observer 1 to ride to the reveal (cost 2).
        return 2.0 * (1.0 - r1) + r1 * (K + 1.0) / 2.0
    raise ValueError(f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")


def _counterexample_params(s: Scenario):
    """Recover (K, r1, mistake_cost) if s has the counterexample shape."""
    try:
        r1 = s.observers[1].likelihood[0][0][0]
        rebuilt = builtin_counterexample(
            K=s.cost_both_active, r1=r1, mistake_cost=s.terminal_cost[0][1]
        )
    except (ValueError, IndexError):
        return None
    if rebuilt == s:
        return s.cost_both_active, r1, s.terminal_cost[0][1]
    return None


def builtin_policies(kind: str, s: Scenario):
    """Return the (observer 1, observer 2) policy pair of the given kind.

    Observer 2's first-step rule is the defining one; everything after it
    is the cost-minimizing completion.  In the two interval kinds observer
    2 stops outside a belief interval and blanks inside it; in the
    nonthreshold kind it declares 0 on the *uninformative* middle belief
    and blanks only when certain, which lets observer 1 read the blank as
    certain evidence.  Decision situations a kind can never reach are
    filled with the myopic declaration so the maps are total.
    """
    if kind not in POLICY_KINDS:
        raise ValueError(f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")
    if _counterexample_params(s) is None:
        raise ValueError("scenario is not a builtin counterexample instance")

    if kind == "nonthreshold":
        first_step = {0: BLANK, 1: DECLARE_0, 2: DECLARE_1}
    elif kind == "ex1":
        first_step = {0: DECLARE_0, 1: BLANK, 2: DECLARE_1}
    else:  # ex2
        first_step = {0: DECLARE_0, 1: DECLARE_1, 2: DECLARE_1}

    rules2 = {}
    for key in policies.decision_keys(s, 2):
        t, prefix, _status = key
        if t == 1:
            rules2[key] = first_step[prefix[0]]
        else:
            # After its first symbol observer 2 learns nothing more, so a
            # single declaration rule covers every later situation: the
            # first symbol either revealed the hypothesis or left the
            # prior, and on the fence the cheaper mistake is declaring 0.
            rules2[key] = DECLARE_1 if prefix[0] == 2 else DECLARE_0
    policy2 = HistoryPolicy.from_mapping(2, rules2)

    if kind == "nonthreshold":
        second_step = {
            ACTIVE: DECLARE_0,  # peer blanked => peer was certain of 0
            (1, DECLARE_0): BLANK,  # uninformative message: wait for the reveal
            (1, DECLARE_1): DECLARE_1,  # peer was certain of 1
        }
    elif kind == "ex1":
        second_step = {
            ACTIVE: BLANK,  # peer will stop sacrificially; wait for the reveal
            (1, DECLARE_0): DECLARE_0,  # echo certain evidence
            (1, DECLARE_1): DECLARE_1,
        }
    else:  # ex2
        second_step = {
            ACTIVE: BLANK,
            (1, DECLARE_0): DECLARE_0,  # message 0 is certain evidence here
            (1, DECLARE_1): BLANK,  # message 1 is ambiguous: wait for the reveal
        }

    rules1 = {}
    for key in policies.decision_keys(s, 1):
        t, prefix, status = key
        if t == 1:
            rules1[key] = BLANK
        elif t == 2:
            rules1[key] = second_step[status]
        else:
            # the third observation is noiseless: declare what it shows
            rules1[key] = DECLARE_0 if prefix[2] == 0 else DECLARE_1
    policy1 = HistoryPolicy.from_mapping(1, rules1)

    return policy1, policy2
