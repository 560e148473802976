"""Sealed-bid second-price auction with a reserve, and the end-to-end group run."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .mechanism import AllocationOutcome, BidTrace, allocate, compute_bid_trace
from .numeric import EXACT, Num, NumericPolicy
from .schedule import ShareSchedule
from .utility import UtilityReport

GROUP_WINS = "group_wins"
GROUP_LOSES = "group_loses"


@dataclass(frozen=True)
class AuctionConfig:
    """Reserve price, exogenous competing bids, and how an exact tie resolves."""

    reserve: Num = 0
    competing_bids: tuple = ()
    tie_policy: str = GROUP_WINS

    def __post_init__(self):
        object.__setattr__(self, "competing_bids", tuple(self.competing_bids))
        if self.tie_policy not in (GROUP_WINS, GROUP_LOSES):
            raise ValueError(f"unknown tie policy {self.tie_policy!r}")
        for v in (self.reserve, *self.competing_bids):
            if not math.isfinite(float(v)) or v < 0:
                raise ValueError("reserve and bids must be finite and non-negative")

    @property
    def threshold(self) -> Num:
        """The price the group must meet: max of reserve and best rival bid."""
        return max(self.reserve, *self.competing_bids, 0)


@dataclass(frozen=True)
class AuctionResult:
    group_won: bool
    clearing_price: Optional[Num]  # defined only on a win


def run_second_price(
    group_bid: Num, cfg: AuctionConfig, policy: NumericPolicy = EXACT
) -> AuctionResult:
    """Second-price rule from the group's perspective.

    The group wins when its bid strictly exceeds max(best rival, reserve), or
    equals it under the group-favorable tie policy; it then pays exactly that
    maximum.
    """
    if group_bid < 0:
        raise ValueError("bid must be non-negative")
    threshold = cfg.threshold
    if policy.gt(group_bid, threshold):
        return AuctionResult(True, threshold)
    if policy.eq(group_bid, threshold) and cfg.tie_policy == GROUP_WINS:
        return AuctionResult(True, threshold)
    return AuctionResult(False, None)


def run_group_participation(
    reports: Sequence[UtilityReport],
    schedule: ShareSchedule,
    cfg: AuctionConfig,
    policy: NumericPolicy = EXACT,
) -> Tuple[BidTrace, AuctionResult, AllocationOutcome]:
    """Compute the trace, enter the auction with the group bid, divide on a win.

    On a win the clearing price never exceeds the group bid, so the division
    step always finds an affordable subset.
    """
    trace = compute_bid_trace(reports, schedule, policy)
    result = run_second_price(trace.group_bid, cfg, policy)
    if result.group_won:
        outcome = allocate(trace, schedule, result.clearing_price, policy)
    else:
        outcome = AllocationOutcome.not_purchased(schedule.n)
    return trace, result, outcome
