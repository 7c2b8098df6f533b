"""Policy representations.

Two forms are used throughout:

* ``HistoryPolicy`` -- an explicit map from decision situations to actions.
  A decision situation for an observer is a triple ``(t, prefix, status)``:
  the time step, the observer's own observation prefix ``y_1..y_t``, and
  what it has seen of the peer.  ``status`` is ``ACTIVE`` (the empty tuple)
  while the peer has only sent blanks, or ``(s, u)`` once the peer stopped
  at step ``s`` with final message ``u``.  That compression is lossless:
  before stopping a peer only ever emits blanks, so the stop time and the
  final message are the entire content of the message history.

* ``IntervalPolicy`` -- belief-interval thresholds per time step and phase,
  produced by the dynamic program's threshold extraction.

Actions are small ints: declare hypothesis 0, declare hypothesis 1, or
send a blank and continue.  At the final step a blank is not admissible.
"""

from __future__ import annotations

import bisect
import dataclasses
from typing import TYPE_CHECKING, Iterable, Mapping

from . import tomlio

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Scenario

DECLARE_0 = 0
DECLARE_1 = 1
BLANK = 2

ACTION_LABELS = {DECLARE_0: "0", DECLARE_1: "1", BLANK: "b"}
LABEL_TO_ACTION = {v: k for k, v in ACTION_LABELS.items()}

#: Peer status while the peer is still active (has sent only blanks).
ACTIVE: tuple = ()


class PolicyIncompleteError(KeyError):
    """A policy was consulted at a decision situation it does not cover."""

    def __init__(self, observer: int, key: tuple):
        t, prefix, status = key
        super().__init__(
            f"observer {observer} policy has no rule for t={t}, "
            f"prefix={prefix}, status={_status_label(status)}"
        )
        self.observer = observer
        self.key = key

    def __str__(self) -> str:
        # KeyError would repr-quote the message
        return self.args[0]


class PolicyFormatError(ValueError):
    """A policy file is malformed or semantically invalid."""


def _status_label(status: tuple) -> str:
    if status == ACTIVE:
        return "active"
    s, u = status
    return f"{s}:{ACTION_LABELS[u]}"


def _status_from_label(label: str) -> tuple:
    if label == "active":
        return ACTIVE
    try:
        s_text, u_text = label.split(":")
        return (int(s_text), LABEL_TO_ACTION[u_text])
    except (ValueError, KeyError):
        raise PolicyFormatError(f"bad status {label!r}; expected 'active' or 's:u'")


def admissible_actions(t: int, horizon: int) -> tuple:
    """Actions available at step t: blanks are forbidden at the horizon."""
    if t >= horizon:
        return (DECLARE_0, DECLARE_1)
    return (DECLARE_0, DECLARE_1, BLANK)


@dataclasses.dataclass(frozen=True)
class HistoryPolicy:
    """A deterministic policy as an explicit decision-situation table.

    ``rules`` is a sorted tuple of ``((t, prefix, status), action)`` pairs;
    it is the identity of the policy (hashable, comparable). Lookup goes
    through an internal dict built once at construction.
    """

    observer: int
    rules: tuple

    def __post_init__(self):
        table = dict(self.rules)
        if len(table) != len(self.rules):
            raise ValueError("duplicate decision keys in policy rules")
        object.__setattr__(self, "_table", table)

    @classmethod
    def from_mapping(cls, observer: int, mapping: Mapping) -> "HistoryPolicy":
        rules = tuple(sorted(mapping.items()))
        return cls(observer=observer, rules=rules)

    def action_at(self, t: int, prefix: tuple, status: tuple) -> int:
        try:
            return self._table[(t, prefix, status)]
        except KeyError:
            raise PolicyIncompleteError(self.observer, (t, prefix, status)) from None

    def keys(self) -> Iterable[tuple]:
        return self._table.keys()


def decision_keys(scenario: "Scenario", observer: int) -> list:
    """Enumerate the conservative decision-key universe for one observer.

    Includes every ``(t, prefix, status)`` whose observation prefix has
    positive probability under at least one hypothesis, crossed with every
    peer status ``ACTIVE`` or ``(s, u)`` with ``s < t``.  No attempt is
    made to prune keys that a particular policy could never consult; a
    total map over this universe is valid for any roll-out.
    """
    model = scenario.observers[observer - 1]
    keys = []
    prefixes = {(): (1.0, 1.0)}
    for t in range(1, scenario.horizon + 1):
        row0, row1 = model.likelihood[t - 1]
        extended = {}
        for prefix in sorted(prefixes):
            w0, w1 = prefixes[prefix]
            for y in range(model.alphabet_size):
                p0, p1 = w0 * row0[y], w1 * row1[y]
                if p0 > 0.0 or p1 > 0.0:
                    extended[prefix + (y,)] = (p0, p1)
        prefixes = extended
        statuses = [ACTIVE] + [(s, u) for s in range(1, t) for u in (DECLARE_0, DECLARE_1)]
        for prefix in sorted(prefixes):
            for status in statuses:
                keys.append((t, prefix, status))
    return keys


def blank_until_horizon_policy(scenario: "Scenario", observer: int) -> HistoryPolicy:
    """Blank at every step before the horizon, then declare myopically.

    The horizon decision uses the posterior implied by the observer's own
    prefix alone (peer messages ignored), breaking ties toward declaring 0.
    Used as the default starting point for person-by-person iteration.
    """
    model = scenario.observers[observer - 1]
    j = scenario.terminal_cost
    rules = {}
    for key in decision_keys(scenario, observer):
        t, prefix, _status = key
        if t < scenario.horizon:
            rules[key] = BLANK
            continue
        w0, w1 = scenario.prior_h0, 1.0 - scenario.prior_h0
        for step, y in enumerate(prefix):
            row0, row1 = model.likelihood[step]
            w0, w1 = w0 * row0[y], w1 * row1[y]
        # expected terminal penalty of each declaration; diagonal is zero
        loss0 = w1 * j[0][1]
        loss1 = w0 * j[1][0]
        rules[key] = DECLARE_0 if loss0 <= loss1 else DECLARE_1
    return HistoryPolicy.from_mapping(observer, rules)


@dataclasses.dataclass(frozen=True)
class IntervalPolicy:
    """Belief-interval policy: per (t, phase) an ordered partition of [0,1].

    ``rows`` maps ``(t, a)`` to a tuple of ``(lo, hi, action)`` intervals,
    ordered, disjoint and covering the unit interval.  ``a`` is 1 when the
    peer has already stopped, 0 while both observers are active.
    """

    observer: int
    rows: tuple  # tuple of ((t, a), intervals)

    def __post_init__(self):
        table = {}
        for (t, a), intervals in self.rows:
            lo_expected = 0.0
            for lo, hi, _action in intervals:
                if lo != lo_expected or hi < lo:
                    raise ValueError(f"intervals for t={t}, a={a} do not tile [0,1]")
                lo_expected = hi
            if intervals and intervals[-1][1] != 1.0:
                raise ValueError(f"intervals for t={t}, a={a} do not reach 1")
            table[(t, a)] = tuple(intervals)
        object.__setattr__(self, "_table", table)

    def intervals_at(self, t: int, a: int) -> tuple:
        return self._table[(t, a)]

    def action_at(self, t: int, a: int, belief: float) -> int:
        intervals = self._table[(t, a)]
        uppers = [hi for _lo, hi, _act in intervals[:-1]]
        return intervals[bisect.bisect_right(uppers, belief)][2]

    def boundaries_at(self, t: int, a: int) -> list:
        intervals = self._table[(t, a)]
        return [hi for _lo, hi, _act in intervals[:-1]]


# ---------------------------------------------------------------------------
# policy files


def save_policy(policy: HistoryPolicy) -> str:
    rules = []
    for (t, prefix, status), action in policy.rules:
        rules.append(
            {
                "t": t,
                "prefix": list(prefix),
                "status": _status_label(status),
                "action": ACTION_LABELS[action],
            }
        )
    doc = {"schema": 1, "observer": policy.observer, "rule": rules}
    return tomlio.dumps_document(doc)


def load_policy(text: str) -> HistoryPolicy:
    try:
        doc = tomlio.load_document(text)
    except tomlio.DocumentFormatError as exc:
        raise PolicyFormatError(f"unparseable policy file: {exc}") from exc
    if doc.get("schema") != 1:
        raise PolicyFormatError("missing or unsupported schema tag (expected schema = 1)")
    observer = doc.get("observer")
    if observer not in (1, 2):
        raise PolicyFormatError("observer must be 1 or 2")
    mapping = {}
    for index, rule in enumerate(doc.get("rule", []), start=1):
        try:
            t = int(rule["t"])
            prefix = tuple(int(y) for y in rule["prefix"])
            status = _status_from_label(rule["status"])
            action = LABEL_TO_ACTION[rule["action"]]
        except PolicyFormatError as exc:
            raise PolicyFormatError(f"rule #{index}: {exc}") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise PolicyFormatError(f"rule #{index} is malformed: {exc!r}") from None
        key = (t, prefix, status)
        if key in mapping:
            raise PolicyFormatError(f"rule #{index} duplicates key {key}")
        mapping[key] = action
    return HistoryPolicy.from_mapping(observer, mapping)
