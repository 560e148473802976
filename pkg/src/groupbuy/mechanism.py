"""The aggregation engine: bearable payments over shrinking subsets, then division.

Starting from the whole group, each step computes the largest total payment
the current subset could bear: the smallest ratio of a member's reported
utility for its resource share to its payment share.  The members whose
reports exactly meet that bound (the bottleneck buyers) are removed and the
step repeats until nobody is left.  The largest bearable payment across steps
is the group's bid; once a price is realized, the largest subset whose
bearable payment covers it wins and divides resource and payment by its
shares.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .numeric import EXACT, Num, NumericPolicy
from .schedule import (
    DegenerateScheduleError,
    ShareSchedule,
    full_mask,
    is_subset,
    members,
    subset_key,
)
from .utility import UtilityReport


@dataclass(frozen=True)
class BidStep:
    """One engine step: the subset considered, what it could bear, who fell out."""

    subset: int
    max_payment: Num
    removed: int


@dataclass(frozen=True)
class BidTrace:
    steps: tuple

    @property
    def group_bid(self) -> Num:
        return max(step.max_payment for step in self.steps)


@dataclass(frozen=True)
class AllocationOutcome:
    purchased: bool
    winning_set: int
    fractions: tuple
    payments: tuple
    price: Num

    @classmethod
    def not_purchased(cls, n: int) -> "AllocationOutcome":
        zeros = (Fraction(0),) * n
        return cls(False, 0, zeros, zeros, Fraction(0))


def _check_inputs(reports: Sequence[UtilityReport], schedule: ShareSchedule):
    if len(reports) != schedule.n:
        raise ValueError(f"{len(reports)} reports for a {schedule.n}-buyer schedule")
    for i, report in enumerate(reports):
        if not isinstance(report, UtilityReport):
            raise ValueError(f"report {i} is not a UtilityReport")


def _is_bottleneck(ratio, value, y, bound, policy: NumericPolicy) -> bool:
    # Exact mode compares the ratios themselves (identical to the product
    # form on rationals, and safe if floats sneak in); tolerance mode uses a
    # relative window so sampled irrational values stay detectable.
    if policy.exact:
        return ratio == bound
    return abs(bound * y - value) <= policy.epsilon * max(1, bound)


def _trace_from(
    reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    start: int,
    policy: NumericPolicy,
) -> BidTrace:
    steps = []
    subset = start
    while subset:
        pair = schedule.shares_for(subset)
        ratios = {}
        values = {}
        for i in members(subset):
            y = pair.payment[i]
            if policy.is_positive(y):
                values[i] = reports[i].value_at(pair.resource[i])
                ratios[i] = values[i] / y
        if not ratios:
            raise DegenerateScheduleError(
                f"no member of {{{subset_key(subset)}}} has a positive payment share",
                subset,
            )
        bound = min(ratios.values())
        removed = 0
        for i, ratio in ratios.items():
            if _is_bottleneck(ratio, values[i], pair.payment[i], bound, policy):
                removed |= 1 << i
        steps.append(BidStep(subset, bound, removed))
        subset &= ~removed
    return BidTrace(tuple(steps))


def compute_bid_trace(
    reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    policy: NumericPolicy = EXACT,
) -> BidTrace:
    """Run the shrinking-subset computation from the full group.

    Reports are validated at construction; the engine assumes admissibility.
    Terminates in at most n steps: the bottleneck set is never empty because
    payment shares sum to one, so some member attains the minimum ratio.
    """
    _check_inputs(reports, schedule)
    return _trace_from(reports, schedule, full_mask(schedule.n), policy)


def group_bid(trace: BidTrace) -> Num:
    """The bid submitted to the external auction: the largest bearable payment."""
    return trace.group_bid


def allocate(
    trace: BidTrace,
    schedule: ShareSchedule,
    price: Num,
    policy: NumericPolicy = EXACT,
) -> AllocationOutcome:
    """Divide resource and payment at a realized price.

    The winner is the earliest (largest) traced subset whose bearable payment
    covers the price, compared buyer-favorably (>=).  A price above the group
    bid buys nothing.
    """
    if price < 0:
        raise ValueError("price must be non-negative")
    for step in trace.steps:
        if policy.ge(step.max_payment, price):
            pair = schedule.shares_for(step.subset)
            payments = tuple(price * y for y in pair.payment)
            return AllocationOutcome(True, step.subset, pair.resource, payments, price)
    return AllocationOutcome.not_purchased(schedule.n)


def fixed_price_outcome(
    reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    price: Num,
    policy: NumericPolicy = EXACT,
) -> AllocationOutcome:
    """Fixed-price variant: drop everyone unaffordable at once, then retry.

    From the current subset, every member whose reported utility for its
    resource share falls short of its payment share of the price is removed
    in one sweep; the sweep repeats until the survivors can all pay (buy) or
    nobody is left (no purchase).
    """
    _check_inputs(reports, schedule)
    if price < 0:
        raise ValueError("price must be non-negative")
    subset = full_mask(schedule.n)
    while subset:
        pair = schedule.shares_for(subset)
        failing = 0
        for i in members(subset):
            y = pair.payment[i]
            if policy.is_positive(y):
                if policy.lt(reports[i].value_at(pair.resource[i]), price * y):
                    failing |= 1 << i
        if not failing:
            payments = tuple(price * y for y in pair.payment)
            return AllocationOutcome(True, subset, pair.resource, payments, price)
        subset &= ~failing
    return AllocationOutcome.not_purchased(schedule.n)


def rerun_from(
    reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    start: int,
    price: Num,
    policy: NumericPolicy = EXACT,
) -> AllocationOutcome:
    """The same engine started from an arbitrary subset instead of the full group.

    Exists to exercise winning-set stability: removing non-winners up front
    must not change the winner, and removing one winner shrinks it.
    """
    _check_inputs(reports, schedule)
    if start == 0:
        raise ValueError("start subset must be non-empty")
    if not is_subset(start, full_mask(schedule.n)):
        raise ValueError("start subset outside the buyer range")
    trace = _trace_from(reports, schedule, start, policy)
    return allocate(trace, schedule, price, policy)
