"""Scenario-driven command line.

Subcommands::

    groupbuy run               <scenario.json>   # trace, bid, auction, division
    groupbuy validate-schedule <scenario.json>   # cross-monotonicity + monotonicity
    groupbuy fuzz              <scenario.json>   # coalition/unilateral deviation scan
    groupbuy compare           <scenario.json>   # same reports across schedules

Exit codes: 0 success/pass, 1 internal error or a failed check (violations,
witnesses), 2 invalid input, 3 budget-exhausted partial result.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .analysis import (
    BudgetError,
    compare_schedules,
    concave_report_grid,
    enumerate_coalition_deviations,
    power_report_grid,
)
from .auction import AuctionConfig, run_second_price
from .mechanism import AllocationOutcome, allocate, compute_bid_trace, fixed_price_outcome
from .numeric import decimal_str
from .schedule import (
    RankedSchedule,
    ScheduleError,
    brute_force_monotonicity_check,
    members,
    nonempty_subsets,
    full_mask,
    subset_key,
    validate_cross_monotonic,
    validate_monotonicity,
)
from .scenario import (
    ScenarioError,
    auction_result_to_json,
    load_scenario_file,
    outcome_to_json,
    trace_to_json,
    violations_to_csv,
    violations_to_json,
)
from .utility import InvalidReportError, concave_class, power_class


def _fmt(v) -> str:
    return f"{float(v):.6g}"


def _braces(mask: int) -> str:
    return "{" + subset_key(mask) + "}"


def _vec(values) -> str:
    return "/".join(_fmt(v) for v in values)


def _write_or_print(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _print_trace(trace):
    print("step  subset        max_payment     removed")
    for j, step in enumerate(trace.steps, start=1):
        print(
            f"{j:<5} {_braces(step.subset):<13} {_fmt(step.max_payment):<15} "
            f"{_braces(step.removed)}"
        )


def cmd_run(args) -> int:
    scenario = load_scenario_file(
        args.scenario, force_exact=args.exact, epsilon=args.epsilon, seed=args.seed
    )
    policy = scenario.policy
    trace = compute_bid_trace(scenario.reports, scenario.schedule, policy)

    report = {"trace": trace_to_json(trace, policy)}
    if scenario.auction is not None:
        result = run_second_price(trace.group_bid, scenario.auction, policy)
        if result.group_won:
            outcome = allocate(trace, scenario.schedule, result.clearing_price, policy)
        else:
            outcome = AllocationOutcome.not_purchased(scenario.n)
        report["auction"] = auction_result_to_json(result, policy)
        summary = (
            f"bid {_fmt(trace.group_bid)}; win at {_fmt(result.clearing_price)}; "
            f"payments {_vec(outcome.payments)}"
            if result.group_won
            else f"bid {_fmt(trace.group_bid)}; lost"
        )
    else:
        outcome = fixed_price_outcome(scenario.reports, scenario.schedule, scenario.fixed_price, policy)
        summary = (
            f"fixed price {_fmt(scenario.fixed_price)}; winners {_braces(outcome.winning_set)}; "
            f"payments {_vec(outcome.payments)}; fractions {_vec(outcome.fractions)}"
            if outcome.purchased
            else f"fixed price {_fmt(scenario.fixed_price)}; no purchase"
        )
    report["outcome"] = outcome_to_json(outcome, policy)

    if args.format == "json":
        _write_or_print(json.dumps(report, indent=2), args.out)
        if args.out:
            print(summary)
    elif args.format == "csv":
        lines = ["step,subset,beta,removed"]
        for j, step in enumerate(trace.steps, start=1):
            lines.append(
                f'{j},"{subset_key(step.subset)}",{decimal_str(step.max_payment)},'
                f'"{subset_key(step.removed)}"'
            )
        _write_or_print("\n".join(lines), args.out)
        print(summary)
    else:
        _print_trace(trace)
        print(summary)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                json.dump(report, fh, indent=2)
                fh.write("\n")
    return 0


def cmd_validate_schedule(args) -> int:
    scenario = load_scenario_file(
        args.scenario, force_exact=args.exact, epsilon=args.epsilon, seed=args.seed
    )
    schedule = scenario.schedule
    policy = scenario.policy
    if schedule.n > 12:
        print("validation is capped at 12 buyers", file=sys.stderr)
        return 2

    zero_share_members = [
        (mask, i)
        for mask in nonempty_subsets(full_mask(schedule.n))
        for i in members(mask)
        if not schedule.shares_for(mask).resource[i] > 0
    ]
    if zero_share_members:
        mask, i = zero_share_members[0]
        print(
            f"note: buyer {i} holds a zero resource share in {_braces(mask)} "
            f"({len(zero_share_members)} such pairs); legal, but such a buyer can win nothing"
        )

    # A weight that only single-crosses a power family makes the schedule
    # monotone against that family, not the whole concave class.
    weight_q = schedule.weight.power_exponent if isinstance(schedule, RankedSchedule) else 1
    if weight_q is not None and weight_q != 1:
        report_class = power_class(weight_q / 4, weight_q)
        class_label = f"power family with exponents up to {_fmt(weight_q)}"
    else:
        report_class = concave_class()
        class_label = "concave class"

    ok = True
    cross = validate_cross_monotonic(schedule, policy=policy)
    if cross is None:
        print("cross-monotonicity: Pass")
    else:
        ok = False
        print(
            f"cross-monotonicity: Witness buyer {cross.buyer}: "
            f"x{_braces(cross.subset_a)} < x{_braces(cross.subset_b)}"
        )

    mono = validate_monotonicity(schedule, policy=policy, report_class=report_class)
    if mono is None:
        print(f"monotonicity ({class_label}): Pass")
    else:
        ok = False
        print(
            f"monotonicity ({class_label}): Witness buyer {mono.buyer} on "
            f"{_braces(mono.subset_a)} within "
            f"{_braces(mono.subset_b)}; utility knots "
            f"{[(str(x), _fmt(u)) for x, u in mono.utility.knots]} with C={_fmt(mono.constant)}"
        )

    if schedule.n <= 8:
        spot = brute_force_monotonicity_check(
            schedule, samples=min(args.budget, 5000), seed=args.seed or 0, policy=policy,
            report_class=report_class,
        )
        if spot is None:
            print(f"brute-force spot check ({min(args.budget, 5000)} samples): Pass")
        else:
            ok = False
            print(
                f"brute-force spot check: Witness buyer {spot.buyer} on "
                f"{_braces(spot.subset_a)} within {_braces(spot.subset_b)} with C={_fmt(spot.constant)}"
            )
    else:
        print("brute-force spot check skipped (more than 8 buyers)")

    print("Pass" if ok else "FAIL")
    return 0 if ok else 1


def cmd_fuzz(args) -> int:
    scenario = load_scenario_file(
        args.scenario, force_exact=args.exact, epsilon=args.epsilon, seed=args.seed
    )
    if scenario.n > 3:
        print("fuzzing is capped at 3 buyers", file=sys.stderr)
        return 2
    if args.budget == 0:
        print("warning: budget 0, nothing fuzzed")
        return 0

    schedule = scenario.schedule
    weight_q = schedule.weight.power_exponent if isinstance(schedule, RankedSchedule) else 1
    if weight_q is not None and weight_q != 1:
        # Truthfulness only holds against report families the weight single-crosses,
        # so the menus stay inside the matching power family.
        exponents = [weight_q * k for k in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1)]
        grid = power_report_grid(schedule, exponents=exponents)
    else:
        grid = concave_report_grid(schedule)

    cfg = scenario.auction
    if cfg is None:
        cfg = AuctionConfig(reserve=scenario.fixed_price)

    result = enumerate_coalition_deviations(
        scenario.reports, schedule, cfg, grid,
        budget=args.budget, seed=args.seed or scenario.seed, policy=scenario.policy,
    )
    print(
        f"{result.profiles} deviation profiles, {len(result.violations)} violations"
        + (", truncated by budget" if result.truncated else "")
    )
    if args.format == "csv":
        payload = violations_to_csv(result)
    else:
        payload = json.dumps(violations_to_json(result, scenario.policy), indent=2)
    if result.violations:
        _write_or_print(payload, args.out)
        return 1
    if args.out:
        _write_or_print(payload, args.out)
    return 3 if result.truncated else 0


def cmd_compare(args) -> int:
    scenario = load_scenario_file(
        args.scenario, force_exact=args.exact, epsilon=args.epsilon, seed=args.seed
    )
    policy = scenario.policy
    if args.schedules:
        names = [s.strip() for s in args.schedules.split(",")]
        missing = [n for n in names if n not in scenario.named_schedules]
        if missing:
            print(f"unknown schedule name(s): {', '.join(missing)}", file=sys.stderr)
            return 2
    else:
        names = [n for n in scenario.named_schedules if n != "primary"] or ["primary"]
    schedules = {name: scenario.named_schedules[name] for name in names}
    prices = [scenario.price]

    comparison = compare_schedules(scenario.reports, schedules, prices, policy)

    rows = []
    for run in comparison.runs:
        for j, step in enumerate(run.trace.steps, start=1):
            pair = schedules[run.name].shares_for(step.subset)
            rows.append(
                (
                    run.name,
                    str(j),
                    subset_key(step.subset),
                    _vec(pair.resource),
                    _vec(pair.payment),
                    decimal_str(step.max_payment),
                    subset_key(step.removed),
                )
            )

    if args.format == "csv":
        lines = ["schedule,step,subset,resource_shares,payment_shares,beta,removed"]
        lines += [f'{r[0]},{r[1]},"{r[2]}",{r[3]},{r[4]},{r[5]},"{r[6]}"' for r in rows]
        _write_or_print("\n".join(lines), args.out)
    elif args.format == "json":
        payload = {
            "runs": [
                {
                    "schedule": run.name,
                    "trace": trace_to_json(run.trace, policy),
                    "outcomes": {
                        decimal_str(price): outcome_to_json(outcome, policy)
                        for price, outcome in run.outcomes.items()
                    },
                }
                for run in comparison.runs
            ],
            "dominance": {f"{a} vs {b}": rel for (a, b), rel in comparison.dominance.items()},
        }
        _write_or_print(json.dumps(payload, indent=2), args.out)
    else:
        header = ("schedule", "step", "subset", "resource", "payment", "max_payment", "removed")
        widths = [max(len(header[c]), *(len(r[c]) for r in rows)) for c in range(len(header))]
        print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for r in rows:
            print("  ".join(v.ljust(w) for v, w in zip(r, widths)))
        for run in comparison.runs:
            for price, outcome in run.outcomes.items():
                if outcome.purchased:
                    print(
                        f"price {_fmt(price)}: {run.name} -> winners {_braces(outcome.winning_set)}, "
                        f"payments {_vec(outcome.payments)}"
                    )
                else:
                    print(f"price {_fmt(price)}: {run.name} -> no purchase")
        for (a, b), rel in comparison.dominance.items():
            print(f"bid vectors: {a} {rel} {b}" if rel != "equal" else f"bid vectors: {a} equal to {b}")
        if args.out:
            print(f"(text format ignores --out; use --format json or csv)", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupbuy",
        description="Group bidding for a shareable resource: run, validate, fuzz, compare.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("scenario", help="path to a scenario JSON file")
        p.add_argument("--out", help="write the machine-readable report here")
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--budget", type=int, default=200_000)
        p.add_argument("--epsilon", type=float, default=None,
                       help="force tolerance-based comparisons with this epsilon")
        p.add_argument("--exact", action="store_true",
                       help="force exact rational arithmetic")

    p_run = sub.add_parser("run", help="trace, bid, auction result, division")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate-schedule", help="cross-monotonicity and monotonicity checks")
    add_common(p_val)
    p_val.set_defaults(func=cmd_validate_schedule)

    p_fuzz = sub.add_parser("fuzz", help="coalition and unilateral deviation scan")
    add_common(p_fuzz)
    p_fuzz.set_defaults(func=cmd_fuzz)

    p_cmp = sub.add_parser("compare", help="same reports across schedules")
    add_common(p_cmp)
    p_cmp.add_argument("--schedules", help="comma-separated names from the scenario's schedules map")
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, InvalidReportError, ScheduleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - last-resort CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
