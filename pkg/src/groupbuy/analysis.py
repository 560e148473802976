"""Property harnesses: deviation fuzzing, consistency checks, welfare accounting.

These are the desk-scale oracles for the mechanism's incentive claims.  None
of them proves anything; they enumerate or sample deviations and instances and
report concrete counterexamples when the claimed property fails to hold.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Tuple

from .auction import AuctionConfig, run_group_participation
from .mechanism import AllocationOutcome, BidTrace, allocate, compute_bid_trace
from .numeric import EXACT, Num, NumericPolicy
from .schedule import ShareSchedule, full_mask, members, nonempty_subsets
from .utility import ClosedFormUtility, UtilityReport, sample_report, validate_knots


# ---------------------------------------------------------------------------
# Preferences over outcomes


@dataclass(frozen=True)
class PreferenceOutcome:
    """What a buyer got, valued by its true utility.

    Ordered lexicographically: higher net first; at equal net, actually
    receiving a share beats walking away empty-handed.  The tie rule encodes
    the assumption that a buyer would rather break even on a real share than
    get nothing; extending it to all equal-net comparisons is a modelling
    choice, so violations record whether they lean on it.
    """

    net: Num
    wins_nonzero: bool


def strictly_prefers(a: PreferenceOutcome, b: PreferenceOutcome, policy: NumericPolicy) -> bool:
    if policy.gt(a.net, b.net):
        return True
    return policy.eq(a.net, b.net) and a.wins_nonzero and not b.wins_nonzero


def weakly_prefers(a: PreferenceOutcome, b: PreferenceOutcome, policy: NumericPolicy) -> bool:
    return not strictly_prefers(b, a, policy)


def outcome_for_buyer(
    buyer: int,
    true_utility: UtilityReport,
    outcome: AllocationOutcome,
    policy: NumericPolicy,
) -> PreferenceOutcome:
    fraction = outcome.fractions[buyer]
    net = true_utility.value_at(fraction) - outcome.payments[buyer]
    return PreferenceOutcome(net, outcome.purchased and policy.is_positive(fraction))


# ---------------------------------------------------------------------------
# Report grids for the fuzzers


def concave_report_grid(
    schedule: ShareSchedule,
    u_max: Num = 1,
    levels: Sequence[Num] = (0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1),
) -> list:
    """Per-buyer report menus: value tuples at the buyer's reachable share points.

    Every tuple over the level grid whose piecewise-linear extrapolation is
    admissible becomes one report, so the menu spans the whole concave class
    at grid resolution.
    """
    scaled = tuple(u_max * Fraction(l) for l in levels)
    grid = []
    for buyer in range(schedule.n):
        points = [p for p in schedule.share_points(buyer) if p > 0]
        menu = []
        for values in itertools.product(scaled, repeat=len(points)):
            knots = ((Fraction(0), Fraction(0)), *zip(points, values))
            if validate_knots(knots) is None:
                menu.append(UtilityReport(knots))
        grid.append(menu)
    return grid


def power_report_grid(
    schedule: ShareSchedule,
    coefficients: Sequence[Num] = (0, Fraction(1, 2), Fraction(3, 4), 1, Fraction(3, 2)),
    exponents: Sequence[Num] = (Fraction(1, 8), Fraction(1, 4), Fraction(3, 8), Fraction(1, 2)),
) -> list:
    """Per-buyer menus sampled from the c*x**k family at reachable share points.

    For schedules whose monotonicity only holds against a power family, the
    fuzz must stay inside that family; duplicates (every c=0 member) collapse.
    """
    grid = []
    for buyer in range(schedule.n):
        points = [p for p in schedule.share_points(buyer) if p > 0]
        menu = []
        seen = set()
        forms = [ClosedFormUtility.linear(0)]
        forms.extend(
            ClosedFormUtility.power(c, k)
            for c in coefficients if c > 0
            for k in exponents
        )
        for form in forms:
            report = sample_report(form, points)
            signature = tuple(float(u) for _, u in report.knots)
            if signature not in seen:
                seen.add(signature)
                menu.append(report)
        grid.append(menu)
    return grid


# ---------------------------------------------------------------------------
# Coalition deviation fuzzing


class BudgetError(RuntimeError):
    def __init__(self, estimate: int, budget: int):
        super().__init__(
            f"exhaustive scan needs {estimate} profiles but the budget is {budget}"
        )
        self.estimate = estimate
        self.budget = budget


@dataclass(frozen=True)
class DeviationViolation:
    """A joint misreport after which no coalition member is worse off and one gains.

    ``uses_tiebreak`` marks violations that vanish when outcomes are compared
    by net value alone, i.e. that depend on the win-a-share tie rule.
    """

    coalition: int
    truthful_reports: tuple
    deviant_reports: tuple
    config: AuctionConfig
    before: tuple  # PreferenceOutcome per coalition member
    after: tuple
    uses_tiebreak: bool


@dataclass(frozen=True)
class FuzzResult:
    violations: tuple
    profiles: int
    truncated: bool


def _scan_coalitions(
    true_reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    cfg: AuctionConfig,
    report_grid: Sequence[Sequence[UtilityReport]],
    sizes,
    budget: int,
    seed: int,
    policy: NumericPolicy,
) -> FuzzResult:
    n = schedule.n
    if n > 3:
        raise ValueError("deviation enumeration is capped at 3 buyers")
    if len(report_grid) != n:
        raise ValueError("report grid must have one menu per buyer")

    _, _, base_outcome = run_group_participation(true_reports, schedule, cfg, policy)
    base_prefs = tuple(
        outcome_for_buyer(i, true_reports[i], base_outcome, policy) for i in range(n)
    )

    coalitions = sorted(
        (mask for mask in nonempty_subsets(full_mask(n)) if len(members(mask)) in sizes),
        key=lambda m: (len(members(m)), m),
    )
    exhaustive = sum(
        math.prod(len(report_grid[i]) for i in members(mask))
        for mask in coalitions
        if len(members(mask)) <= 2
    )
    if exhaustive > budget:
        raise BudgetError(exhaustive, budget)

    rng = random.Random(seed)
    violations = []
    profiles = 0
    truncated = False

    def evaluate(idxs, profile):
        nonlocal profiles
        profiles += 1
        reports = list(true_reports)
        for i, rep in zip(idxs, profile):
            reports[i] = rep
        _, _, outcome = run_group_participation(reports, schedule, cfg, policy)
        after = tuple(
            outcome_for_buyer(i, true_reports[i], outcome, policy) for i in idxs
        )
        before = tuple(base_prefs[i] for i in idxs)
        all_weak = all(weakly_prefers(a, b, policy) for a, b in zip(after, before))
        any_strict = any(strictly_prefers(a, b, policy) for a, b in zip(after, before))
        if all_weak and any_strict:
            net_only = all(policy.ge(a.net, b.net) for a, b in zip(after, before)) and any(
                policy.gt(a.net, b.net) for a, b in zip(after, before)
            )
            violations.append(
                DeviationViolation(
                    coalition=sum(1 << i for i in idxs),
                    truthful_reports=tuple(true_reports[i] for i in idxs),
                    deviant_reports=tuple(profile),
                    config=cfg,
                    before=before,
                    after=after,
                    uses_tiebreak=not net_only,
                )
            )

    for mask in coalitions:
        idxs = members(mask)
        menus = [report_grid[i] for i in idxs]
        total = math.prod(len(m) for m in menus)
        if len(idxs) <= 2 or total <= budget - profiles:
            for profile in itertools.product(*menus):
                evaluate(idxs, profile)
        else:
            remaining = max(budget - profiles, 0)
            truncated = True
            for _ in range(remaining):
                evaluate(idxs, tuple(rng.choice(menu) for menu in menus))

    violations.sort(key=lambda v: (v.coalition, tuple(r.knots for r in v.deviant_reports)))
    return FuzzResult(tuple(violations), profiles, truncated)


def enumerate_coalition_deviations(
    true_reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    cfg: AuctionConfig,
    report_grid: Sequence[Sequence[UtilityReport]],
    budget: int = 250_000,
    seed: int = 0,
    policy: NumericPolicy = EXACT,
) -> FuzzResult:
    """Try every joint misreport of every coalition against truthful play.

    Coalitions of one or two buyers are crossed exhaustively (refusing with a
    size estimate when that alone exceeds the budget); the three-buyer
    coalition is sampled within the remaining budget.  An empty violation list
    over a monotone schedule is the expected desk-scale outcome.
    """
    return _scan_coalitions(
        true_reports, schedule, cfg, report_grid,
        sizes=range(1, schedule.n + 1), budget=budget, seed=seed, policy=policy,
    )


def check_unilateral_truthfulness(
    true_reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    cfg: AuctionConfig,
    report_grid: Sequence[Sequence[UtilityReport]],
    budget: int = 250_000,
    seed: int = 0,
    policy: NumericPolicy = EXACT,
) -> FuzzResult:
    """Single-buyer slice of the coalition scan."""
    return _scan_coalitions(
        true_reports, schedule, cfg, report_grid,
        sizes=(1,), budget=budget, seed=seed, policy=policy,
    )


# ---------------------------------------------------------------------------
# Individual consistency


@dataclass(frozen=True)
class ConsistencyViolation:
    """A buyer worth more than the whole price was left out (or nothing was bought)."""

    buyer: int
    purchased: bool


def check_individual_consistency(
    reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    price: Num,
    policy: NumericPolicy = EXACT,
) -> Optional[ConsistencyViolation]:
    """If anyone values the whole resource above the price, the group must buy
    and every such buyer must be in the winning set.  Assumes a monotone
    schedule."""
    eligible = [
        i for i in range(schedule.n) if policy.gt(reports[i].value_at(Fraction(1)), price)
    ]
    if not eligible:
        return None
    trace = compute_bid_trace(reports, schedule, policy)
    outcome = allocate(trace, schedule, price, policy)
    if not outcome.purchased:
        return ConsistencyViolation(eligible[0], False)
    for i in eligible:
        if not outcome.winning_set >> i & 1:
            return ConsistencyViolation(i, True)
    return None


# ---------------------------------------------------------------------------
# Welfare


@dataclass(frozen=True)
class WelfareReport:
    mechanism_welfare: Num
    optimal_welfare: Num
    optimal_division: tuple
    purchased_by_mechanism: bool
    purchasable_optimally: bool

    @property
    def inefficiency_flagged(self) -> bool:
        """The group could have covered the price under some division, yet did not buy."""
        return self.purchasable_optimally and not self.purchased_by_mechanism

    @property
    def welfare_gap(self) -> Num:
        return self.optimal_welfare - self.mechanism_welfare


def optimal_welfare(reports: Sequence[UtilityReport]) -> Tuple[Num, tuple]:
    """Maximize total utility over divisions summing to at most one.

    Greedy by marginal slope over the concatenated knot segments, which is
    exact for concave piecewise-linear utilities: within each buyer the
    segments already come steepest-first, so the global pick order is a valid
    allocation path.
    """
    segments = []
    for buyer, report in enumerate(reports):
        knots = report.knots
        for (x0, u0), (x1, u1) in zip(knots, knots[1:]):
            slope = (u1 - u0) / (x1 - x0)
            if slope > 0:
                segments.append((slope, buyer, x1 - x0))
    segments.sort(key=lambda seg: (-seg[0], seg[1]))
    capacity = Fraction(1)
    division = [Fraction(0)] * len(reports)
    welfare = Fraction(0)
    for slope, buyer, width in segments:
        if not capacity > 0:
            break
        take = min(width, capacity)
        division[buyer] += take
        welfare += slope * take
        capacity -= take
    return welfare, tuple(division)


def efficiency_gap(
    reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    price: Num,
    policy: NumericPolicy = EXACT,
) -> WelfareReport:
    """Realized total utility at a price versus the unconstrained optimum.

    Flags the affordability gap: the optimum covering the price while the
    mechanism walks away.  The mechanism can lose welfare because its division
    is pinned to the pre-announced shares; this measures, never bounds, that
    loss.
    """
    trace = compute_bid_trace(reports, schedule, policy)
    outcome = allocate(trace, schedule, price, policy)
    if outcome.purchased:
        realized = sum(
            reports[i].value_at(outcome.fractions[i]) for i in range(schedule.n)
        )
    else:
        realized = Fraction(0)
    best, division = optimal_welfare(reports)
    return WelfareReport(
        mechanism_welfare=realized,
        optimal_welfare=best,
        optimal_division=division,
        purchased_by_mechanism=outcome.purchased,
        purchasable_optimally=policy.gt(best, price),
    )


# ---------------------------------------------------------------------------
# Schedule comparison


@dataclass(frozen=True)
class ScheduleRun:
    name: str
    trace: BidTrace
    outcomes: dict  # price -> AllocationOutcome


@dataclass(frozen=True)
class ScheduleComparison:
    runs: tuple
    dominance: dict  # (name_a, name_b) -> relation of a's bid vector vs b's


def _bid_vector_relation(u: Sequence[Num], v: Sequence[Num], policy: NumericPolicy) -> str:
    length = max(len(u), len(v))
    a = list(u) + [Fraction(0)] * (length - len(u))
    b = list(v) + [Fraction(0)] * (length - len(v))
    if all(policy.eq(x, y) for x, y in zip(a, b)):
        return "equal"
    if all(policy.ge(x, y) for x, y in zip(a, b)):
        return "dominates"
    if all(policy.le(x, y) for x, y in zip(a, b)):
        return "dominated"
    return "incomparable"


def compare_schedules(
    reports: Sequence[UtilityReport],
    schedules: Mapping[str, ShareSchedule],
    prices: Sequence[Num],
    policy: NumericPolicy = EXACT,
) -> ScheduleComparison:
    """Run the same reports through several schedules and compare bid vectors.

    A schedule dominates another when its ordered bearable payments are
    componentwise at least as large, exhausted (shorter) vectors padding with
    zero.
    """
    for name, schedule in schedules.items():
        if schedule.n != len(reports):
            raise ValueError(f"schedule {name!r} is for {schedule.n} buyers, reports for {len(reports)}")
    runs = []
    for name, schedule in schedules.items():
        trace = compute_bid_trace(reports, schedule, policy)
        outcomes = {price: allocate(trace, schedule, price, policy) for price in prices}
        runs.append(ScheduleRun(name, trace, outcomes))
    dominance = {}
    for ra, rb in itertools.combinations(runs, 2):
        u = [s.max_payment for s in ra.trace.steps]
        v = [s.max_payment for s in rb.trace.steps]
        dominance[(ra.name, rb.name)] = _bid_vector_relation(u, v, policy)
    return ScheduleComparison(tuple(runs), dominance)
