"""Posterior updates on the binary hypothesis.

Beliefs are the probability the observer assigns to hypothesis 0.  Two
update routes exist: one folds in only the observer's own symbol, the
other additionally conditions on the peer's visible action through its
message likelihood row.  Both are plain Bayes rules; they are kept as
tiny scalar functions because the solver calls them in its innermost
recursion and builds larger vectorized sweeps on top itself.
"""

from __future__ import annotations

from typing import NamedTuple


class ImpossibleOutcomeError(ValueError):
    """Conditioning on an event the current belief gives zero mass."""


def update_own(belief: float, p_y_h0: float, p_y_h1: float) -> float:
    """Condition on one own symbol with the given per-hypothesis likelihoods."""
    mass0 = belief * p_y_h0
    mass1 = (1.0 - belief) * p_y_h1
    total = mass0 + mass1
    if total <= 0.0:
        raise ImpossibleOutcomeError(
            f"symbol has zero probability under belief {belief!r} "
            f"(likelihoods {p_y_h0!r}, {p_y_h1!r})"
        )
    return mass0 / total


def update_joint(
    belief: float,
    p_y_h0: float,
    p_y_h1: float,
    p_u_h0: float,
    p_u_h1: float,
) -> float:
    """Condition jointly on an own symbol and the peer's visible action.

    The symbol and the action are independent given the hypothesis, so
    their likelihoods multiply within each hypothesis before normalizing.
    """
    mass0 = belief * p_y_h0 * p_u_h0
    mass1 = (1.0 - belief) * p_y_h1 * p_u_h1
    total = mass0 + mass1
    if total <= 0.0:
        raise ImpossibleOutcomeError(
            f"symbol/action combination has zero probability under belief {belief!r}"
        )
    return mass0 / total


class Outcome(NamedTuple):
    """One positive-probability (symbol, peer action) pair at a step."""

    symbol: int
    message: int
    probability: float
    posterior: float


def outcome_distribution(belief, own_row_h0, own_row_h1, message_rows=None):
    """Enumerate next-step outcomes, their predictive weights and posteriors.

    ``message_rows``, when given, is a pair of length-3 likelihood rows
    (one per hypothesis, indexed by peer action code); omitting it treats
    the peer as silent and yields one outcome per symbol with message -1.
    Zero-probability outcomes are dropped, and the returned probabilities
    sum to one.
    """
    w0 = belief
    w1 = 1.0 - belief
    results = []
    if message_rows is None:
        for y, (a, b) in enumerate(zip(own_row_h0, own_row_h1)):
            mass0 = w0 * a
            mass1 = w1 * b
            total = mass0 + mass1
            if total > 0.0:
                results.append(Outcome(y, -1, total, mass0 / total))
    else:
        row0, row1 = message_rows
        for y, (a, b) in enumerate(zip(own_row_h0, own_row_h1)):
            for u in range(3):
                mass0 = w0 * a * row0[u]
                mass1 = w1 * b * row1[u]
                total = mass0 + mass1
                if total > 0.0:
                    results.append(Outcome(y, u, total, mass0 / total))
    return results
