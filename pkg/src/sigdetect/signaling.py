"""What a fixed peer policy makes the peer's actions say and cost.

While both observers are active, the peer's visible action at each step is
a message: declare 0, declare 1, or blank.  Given the peer's policy, each
message has a per-hypothesis likelihood among the peer's observation paths
that were blank so far -- a likelihood row the consuming observer folds
into its belief exactly like an own symbol.  This module computes those
rows with one forward sweep over the peer's blank-consistent observation
prefixes.

The same sweep fills the stop-side tables: the expected remaining cost
once the consuming observer commits to declaration ``u`` at step ``t``
while the peer is still active.  If the peer stops at ``t`` as well, the
simultaneous-stop convention applies (observer 2's declaration is the
final one); if the peer blanks, it pays the single-active running cost
until it stops, and its own declaration is final.  Which branch the
declaration ``u`` enters, and how the peer's later actions read the stop,
depends on who is consuming, hence the ``which_observer`` parameter.

Every quantity is reported two ways: *mass-weighted*, jointly with the
event "peer blank so far" (the form the dynamic program consumes -- no
divisions, so dyadic inputs stay exact), and *normalized* per hypothesis,
for inspection.  Where the peer cannot have stayed blank under a
hypothesis, the normalized row is ``None``.
"""

from __future__ import annotations

import dataclasses
import functools

from .policies import ACTIVE, BLANK, HistoryPolicy, PolicyFormatError
from .scenario import Scenario


@dataclasses.dataclass(frozen=True)
class MessageLikelihoodTable:
    """Per-step message statistics of one observer under a fixed policy.

    Rows are indexed ``[t - 1][h]`` for steps ``1..horizon``.  ``path_mass``
    rows are ``(n_0, n_1, n_blank)``: the joint probability, given ``h``, of
    the peer blanking before ``t`` and acting as indexed at ``t``.
    ``blank_reach`` is the total blank-so-far mass, so each ``path_mass``
    row sums to it; ``conditional`` rows are ``path_mass / blank_reach``.
    """

    observer: int
    horizon: int
    path_mass: tuple
    blank_reach: tuple
    conditional: tuple

    def mass_row(self, t: int, h: int) -> tuple:
        return self.path_mass[t - 1][h]

    def reach(self, t: int, h: int) -> float:
        return self.blank_reach[t - 1][h]

    def conditional_row(self, t: int, h: int):
        return self.conditional[t - 1][h]


@dataclasses.dataclass(frozen=True)
class StopSideTable:
    """Remaining-cost tables for stopping first, per step and hypothesis.

    ``mass_weighted[t - 1][h]`` is ``(x_0, x_1)``; ``x_u`` is the expected
    remaining cost of declaring ``u`` at ``t``, accumulated jointly with
    the peer's blank-so-far event under hypothesis ``h``.  The table
    extends through ``t == horizon``, where the peer necessarily stops
    alongside and only the simultaneous-stop branch contributes.
    """

    responder: int
    horizon: int
    mass_weighted: tuple
    conditional: tuple

    def mass_row(self, t: int, h: int) -> tuple:
        return self.mass_weighted[t - 1][h]

    def conditional_row(self, t: int, h: int):
        return self.conditional[t - 1][h]


def _check_pairing(scenario: Scenario, peer: HistoryPolicy, which_observer: int):
    if which_observer not in (1, 2):
        raise ValueError(f"which_observer must be 1 or 2, got {which_observer!r}")
    if peer.observer != 3 - which_observer:
        raise ValueError(
            f"peer policy belongs to observer {peer.observer}, "
            f"but observer {which_observer} needs its peer (observer {3 - which_observer})"
        )


def message_likelihoods(
    scenario: Scenario, peer: HistoryPolicy, which_observer: int
) -> MessageLikelihoodTable:
    """Message likelihood rows of ``peer`` as seen by ``which_observer``."""
    _check_pairing(scenario, peer, which_observer)
    return _forward_tables(scenario, peer, which_observer)[0]


def stop_side_table(
    scenario: Scenario, peer: HistoryPolicy, which_observer: int
) -> StopSideTable:
    """Remaining-cost table for ``which_observer`` stopping first against ``peer``."""
    _check_pairing(scenario, peer, which_observer)
    return _forward_tables(scenario, peer, which_observer)[1]


def _no_blank_at_horizon(observer: int, t: int, prefix: tuple):
    raise PolicyFormatError(
        f"observer {observer} policy sends a blank at the horizon "
        f"(t={t}, prefix={prefix}); the last step must declare"
    )


def _roll_alone(scenario, peer, t_stop, u, start_frontier):
    """Peer continues alone after the consumer stopped at ``t_stop`` with ``u``.

    ``start_frontier`` maps blank-so-far peer prefixes of length ``t_stop``
    to per-hypothesis masses.  Returns per-hypothesis sums of
    ``mass * (k * (s - t_stop) + terminal_cost[decision][h])`` over the
    peer's stopping step ``s`` and decision under status ``(t_stop, u)``.
    """
    model = scenario.observers[peer.observer - 1]
    penalty = scenario.terminal_cost
    k = scenario.cost_one_active
    status = (t_stop, u)
    total = [0.0, 0.0]
    frontier = start_frontier
    for s in range(t_stop + 1, scenario.horizon + 1):
        row0, row1 = model.likelihood[s - 1]
        next_frontier = {}
        for q, (m0, m1) in frontier.items():
            for y in range(model.alphabet_size):
                mm0 = m0 * row0[y]
                mm1 = m1 * row1[y]
                if mm0 == 0.0 and mm1 == 0.0:
                    continue
                q2 = q + (y,)
                a = peer.action_at(s, q2, status)
                if a == BLANK:
                    if s == scenario.horizon:
                        _no_blank_at_horizon(peer.observer, s, q2)
                    next_frontier[q2] = (mm0, mm1)
                else:
                    step_cost = k * (s - t_stop)
                    total[0] += mm0 * (step_cost + penalty[a][0])
                    total[1] += mm1 * (step_cost + penalty[a][1])
        frontier = next_frontier
    return tuple(total)


@functools.lru_cache(maxsize=None)
def _forward_tables(scenario, peer, which_observer):
    model = scenario.observers[peer.observer - 1]
    penalty = scenario.terminal_cost
    horizon = scenario.horizon

    mass_rows = []
    reach_rows = []
    msg_cond_rows = []
    stop_mass_rows = []
    stop_cond_rows = []

    frontier = {(): (1.0, 1.0)}  # blank-so-far prefixes of length t-1, mass per h
    for t in range(1, horizon + 1):
        reach = [0.0, 0.0]
        for m0, m1 in frontier.values():
            reach[0] += m0
            reach[1] += m1

        counts = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]  # [h][action]
        tie_penalty = [0.0, 0.0]  # mass * terminal_cost[peer decision][h] at t
        blankers = {}
        row0, row1 = model.likelihood[t - 1]
        for q, (m0, m1) in frontier.items():
            for y in range(model.alphabet_size):
                mm0 = m0 * row0[y]
                mm1 = m1 * row1[y]
                if mm0 == 0.0 and mm1 == 0.0:
                    continue
                q2 = q + (y,)
                a = peer.action_at(t, q2, ACTIVE)
                if a == BLANK and t == horizon:
                    _no_blank_at_horizon(peer.observer, t, q2)
                counts[0][a] += mm0
                counts[1][a] += mm1
                if a == BLANK:
                    blankers[q2] = (mm0, mm1)
                else:
                    tie_penalty[0] += mm0 * penalty[a][0]
                    tie_penalty[1] += mm1 * penalty[a][1]

        # Declaring u at t while the peer is active: either the peer stops
        # at t too (simultaneous-stop convention decides whose declaration
        # is final) or it carries on alone under status (t, u).
        alone = {u: _roll_alone(scenario, peer, t, u, blankers) for u in (0, 1)}
        stop_mass = [[0.0, 0.0], [0.0, 0.0]]  # [h][u]
        for u in (0, 1):
            for h in (0, 1):
                if which_observer == 2:
                    # consumer's declaration wins the tie
                    tie = (counts[h][0] + counts[h][1]) * penalty[u][h]
                else:
                    # the peer here is observer 2: its declaration is final
                    # both on ties and when it stops later
                    tie = tie_penalty[h]
                stop_mass[h][u] = tie + alone[u][h]

        mass_rows.append((tuple(counts[0]), tuple(counts[1])))
        reach_rows.append(tuple(reach))
        msg_cond_rows.append(
            tuple(
                tuple(c / reach[h] for c in counts[h]) if reach[h] > 0.0 else None
                for h in (0, 1)
            )
        )
        stop_mass_rows.append((tuple(stop_mass[0]), tuple(stop_mass[1])))
        stop_cond_rows.append(
            tuple(
                tuple(x / reach[h] for x in stop_mass[h]) if reach[h] > 0.0 else None
                for h in (0, 1)
            )
        )
        frontier = blankers

    messages = MessageLikelihoodTable(
        observer=peer.observer,
        horizon=horizon,
        path_mass=tuple(mass_rows),
        blank_reach=tuple(reach_rows),
        conditional=tuple(msg_cond_rows),
    )
    stops = StopSideTable(
        responder=which_observer,
        horizon=horizon,
        mass_weighted=tuple(stop_mass_rows),
        conditional=tuple(stop_cond_rows),
    )
    return messages, stops
