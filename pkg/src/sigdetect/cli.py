"""Command-line front-end.

Four subcommands drive the library end to end:

* ``counterexample`` -- evaluate the three builtin policy pairs on the
  builtin instance, compare with the closed-form reference costs, and
  write ``counterexample.csv``.
* ``solve`` -- run person-by-person iteration on a scenario, then dump the
  final observer-2 value functions (``values.csv``), their interval
  structure (``thresholds.csv``), the concavity check (``concavity.csv``)
  and the iteration trace (``trace.csv``).
* ``eval`` -- exact expected cost of a policy pair from files or builtins,
  optional per-path trace CSV and seeded simulation.
* ``sweep`` -- builtin pair costs over a (K, r1) grid, to ``sweep.csv``.

All files are written atomically (temp file, then rename) and identical
invocations produce byte-identical bytes.  Exit status: 0 success, 1
property or acceptance failure, 2 usage/validation/I-O failure.  The
environment variable ``SIGDETECT_THREADS`` caps worker parallelism in the
brute-force search (unset runs serial).
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile

from . import dp, evaluation
from .policies import (
    ACTION_LABELS,
    PolicyFormatError,
    PolicyIncompleteError,
    load_policy,
)
from .scenario import (
    POLICY_KINDS,
    ScenarioFormatError,
    ScenarioValidationError,
    builtin_counterexample,
    builtin_policies,
    load_scenario,
    reference_pair_cost,
)

MATCH_TOL = 1e-9
SWEEP_CELL_LIMIT = 10**4
STRICT_REGIME_R1 = 2.0 / 3.0


def _write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sigdetect-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _flag(value: bool) -> str:
    return "true" if value else "false"


def _add_scenario_source(parser):
    parser.add_argument("--scenario", metavar="PATH", help="scenario file to load")
    parser.add_argument(
        "--builtin",
        choices=("counterexample",),
        help="use a builtin scenario instead of a file",
    )
    parser.add_argument("--K", type=float, default=1.5, help="builtin: both-active step cost")
    parser.add_argument(
        "--r1", type=float, default=0.5, help="builtin: informative-symbol probability"
    )


def _scenario_from(args):
    if args.scenario and args.builtin:
        raise ValueError("pass either --scenario or --builtin, not both")
    if args.scenario:
        with open(args.scenario) as handle:
            return load_scenario(handle.read())
    if args.builtin:
        return builtin_counterexample(args.K, args.r1)
    raise ValueError("one of --scenario or --builtin is required")


def _pair_costs(scenario):
    costs = {}
    for kind in POLICY_KINDS:
        p1, p2 = builtin_policies(kind, scenario)
        costs[kind], _ = evaluation.exact_cost(scenario, p1, p2)
    return costs


def cmd_counterexample(args) -> int:
    scenario = builtin_counterexample(args.K, args.r1)
    costs = _pair_costs(scenario)
    rows = []
    all_match = True
    for kind in POLICY_KINDS:
        reference = reference_pair_cost(kind, args.K, args.r1)
        match = abs(costs[kind] - reference) <= MATCH_TOL
        all_match = all_match and match
        rows.append([args.K, args.r1, kind, costs[kind], reference, _flag(match)])
        print(
            f"{kind:>13}: exact {costs[kind]!r}  reference {reference!r}  match {_flag(match)}"
        )
    strict = costs["nonthreshold"] < min(costs["ex1"], costs["ex2"])
    print(f"strict_inequality: {_flag(strict)}")
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(
        os.path.join(args.out, "counterexample.csv"),
        _csv_text(["K", "r1", "kind", "exact_cost", "reference_cost", "matches"], rows),
    )
    return 0 if all_match and (strict or args.r1 >= STRICT_REGIME_R1) else 1


def cmd_solve(args) -> int:
    scenario = _scenario_from(args)
    (policy1, _policy2), trace = dp.person_by_person(
        scenario, max_iters=args.max_iters, tol=args.tol
    )
    # the dumped tables describe observer 2 against the settled observer 1
    oracle = dp.ValueOracle(scenario, 2, policy1)

    value_rows = []
    for t in range(1, scenario.horizon + 1):
        for a in (0, 1):
            grid = oracle.value_grid(t, a, args.resolution)
            for pi, value, action in zip(grid.beliefs, grid.values, grid.actions):
                value_rows.append([t, a, float(pi), float(value), ACTION_LABELS[int(action)]])

    report = dp.check_concavity(oracle, args.resolution, args.tol)
    concavity_rows = [
        [cell.t, cell.a, cell.min_second_difference, _flag(cell.passed)]
        for cell in report.cells
    ]
    trace_rows = []
    for entry in trace:
        trace_rows.append([entry.round_index, 2, entry.cost_after_obs2])
        trace_rows.append([entry.round_index, 1, entry.cost_after_obs1])

    os.makedirs(args.out, exist_ok=True)
    _write_atomic(
        os.path.join(args.out, "values.csv"),
        _csv_text(["t", "a", "pi", "value", "action"], value_rows),
    )
    _write_atomic(
        os.path.join(args.out, "concavity.csv"),
        _csv_text(["t", "a", "min_second_difference", "passed"], concavity_rows),
    )
    _write_atomic(
        os.path.join(args.out, "trace.csv"),
        _csv_text(["round", "observer", "cost"], trace_rows),
    )

    try:
        threshold_rows = []
        for t in range(1, scenario.horizon + 1):
            for a in (0, 1):
                intervals = dp.extract_thresholds(oracle, t, a, args.resolution)
                for index, (left, right) in enumerate(zip(intervals, intervals[1:])):
                    threshold_rows.append(
                        [t, a, index, left[1], ACTION_LABELS[left[2]], ACTION_LABELS[right[2]]]
                    )
    except dp.RegionBoundViolation as exc:
        print(f"threshold structure violated: {exc}", file=sys.stderr)
        return 1
    _write_atomic(
        os.path.join(args.out, "thresholds.csv"),
        _csv_text(
            ["t", "a", "boundary_index", "pi_boundary", "action_left", "action_right"],
            threshold_rows,
        ),
    )

    final_cost = trace[-1].cost_after_obs1
    print(f"rounds {len(trace)}  final cost {final_cost!r}")
    if not report.ok:
        print("concavity check failed", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args) -> int:
    scenario = _scenario_from(args)
    if args.builtin_policies:
        if args.policy1 or args.policy2:
            raise ValueError("pass either policy files or --builtin-policies, not both")
        policy1, policy2 = builtin_policies(args.builtin_policies, scenario)
    else:
        if not (args.policy1 and args.policy2):
            raise ValueError("need --policy1 and --policy2, or --builtin-policies")
        with open(args.policy1) as handle:
            policy1 = load_policy(handle.read())
        with open(args.policy2) as handle:
            policy2 = load_policy(handle.read())
        if policy1.observer != 1 or policy2.observer != 2:
            raise ValueError(
                f"--policy1/--policy2 must belong to observers 1 and 2, "
                f"got {policy1.observer} and {policy2.observer}"
            )
    cost, trace = evaluation.exact_cost(scenario, policy1, policy2, want_trace=args.trace)
    print(f"exact_cost {cost!r}")
    if args.trace:
        rows = [
            [
                outcome.hypothesis,
                ".".join(map(str, outcome.path1)) + "|" + ".".join(map(str, outcome.path2)),
                outcome.probability,
                outcome.breakdown.tau1,
                outcome.breakdown.tau2,
                outcome.breakdown.last_decider,
                outcome.breakdown.operating_cost,
                outcome.breakdown.terminal_cost,
                outcome.breakdown.total,
            ]
            for outcome in trace
        ]
        os.makedirs(args.out, exist_ok=True)
        _write_atomic(
            os.path.join(args.out, "eval_trace.csv"),
            _csv_text(
                ["h", "path", "prob", "tau1", "tau2", "L", "operating", "terminal", "total"],
                rows,
            ),
        )
    if args.n > 0:
        result = evaluation.simulate(scenario, policy1, policy2, args.n, args.seed)
        print(
            f"simulate n={result.count} seed={result.seed} mean {result.mean!r} "
            f"std {result.std!r} half_width {result.half_width!r}"
        )
    return 0


def _parse_floats(text: str, flag: str):
    values = [float(piece) for piece in text.replace(",", " ").split()]
    if not values:
        raise ValueError(f"{flag} lists no values")
    return values


def cmd_sweep(args) -> int:
    k_values = _parse_floats(args.K_values, "--K-values")
    r1_values = _parse_floats(args.r1_values, "--r1-values")
    if len(k_values) * len(r1_values) > SWEEP_CELL_LIMIT:
        raise ValueError(
            f"grid has {len(k_values) * len(r1_values)} cells, above {SWEEP_CELL_LIMIT}"
        )
    rows = []
    for K in k_values:
        for r1 in r1_values:
            costs = _pair_costs(builtin_counterexample(K, r1))
            strict = costs["nonthreshold"] < min(costs["ex1"], costs["ex2"])
            rows.append(
                [K, r1, costs["ex1"], costs["ex2"], costs["nonthreshold"], _flag(strict)]
            )
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(
        os.path.join(args.out, "sweep.csv"),
        _csv_text(
            ["K", "r1", "cost_ex1", "cost_ex2", "cost_nonthreshold", "strict_inequality"],
            rows,
        ),
    )
    print(f"{len(rows)} cells written")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigdetect",
        description="Solver and evaluator for two-observer sequential detection with signaling.",
        epilog="SIGDETECT_THREADS caps brute-force worker parallelism.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    ce = commands.add_parser(
        "counterexample", help="evaluate the builtin policy pairs against reference costs"
    )
    ce.add_argument("--K", type=float, default=1.5)
    ce.add_argument("--r1", type=float, default=0.5)
    ce.add_argument("--out", default=".", help="output directory")
    ce.set_defaults(handler=cmd_counterexample)

    solve = commands.add_parser(
        "solve", help="person-by-person iteration plus value/threshold/concavity dumps"
    )
    _add_scenario_source(solve)
    solve.add_argument("--out", default=".", help="output directory")
    solve.add_argument("--resolution", type=float, default=1e-3, help="belief grid spacing")
    solve.add_argument(
        "--tol", type=float, default=1e-8, help="iteration stop and concavity tolerance"
    )
    solve.add_argument("--max-iters", type=int, default=50, help="iteration round limit")
    solve.set_defaults(handler=cmd_solve)

    ev = commands.add_parser("eval", help="exact and simulated cost of a policy pair")
    _add_scenario_source(ev)
    ev.add_argument("--policy1", metavar="PATH", help="observer 1 policy file")
    ev.add_argument("--policy2", metavar="PATH", help="observer 2 policy file")
    ev.add_argument(
        "--builtin-policies", choices=POLICY_KINDS, help="use a builtin policy pair"
    )
    ev.add_argument("--out", default=".", help="output directory")
    ev.add_argument("--n", type=int, default=0, help="simulation sample count (0 skips)")
    ev.add_argument("--seed", type=int, default=0, help="simulation seed")
    ev.add_argument("--trace", action="store_true", help="write per-path trace CSV")
    ev.set_defaults(handler=cmd_eval)

    sweep = commands.add_parser("sweep", help="builtin pair costs over a (K, r1) grid")
    sweep.add_argument("--K-values", required=True, help="comma-separated K grid")
    sweep.add_argument("--r1-values", required=True, help="comma-separated r1 grid")
    sweep.add_argument("--out", default=".", help="output directory")
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (
        ScenarioFormatError,
        ScenarioValidationError,
        PolicyFormatError,
        PolicyIncompleteError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_entry():
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    console_entry()
