"""Scenario files and machine-readable reports.

A scenario is a UTF-8 JSON document describing buyers, a schedule, and either
an auction environment or a fixed price.  Numbers are decimal strings or
"p/q" rational strings (raw JSON numbers are accepted and read decimally).

Buyer stanzas::

    {"kind": "linear", "c": "1"}
    {"kind": "power",  "c": "1", "k": "1/2"}
    {"kind": "log",    "c": "1"}
    {"kind": "knots",  "points": [["0", "0"], ["1/2", "0.5"], ["1", "1"]]}

Schedule stanzas::

    {"kind": "equal-split"}
    {"kind": "cmss",  "shares": {"0,1": ["1/2", "1/2", "0"], ...}}
    {"kind": "rras",  "order": [0, 1, 2], "base": ["1/2", "1/4", "1/4"], "f": "sqrt"}
    {"kind": "table", "entries": {"0,1": {"x": [...], "y": [...]}, ...}}

Subset keys are sorted comma-joined buyer indices ("0,2").  Reports emit every
number as a decimal string with 15 significant digits, plus an exact "p/q"
string under the exact arithmetic policy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Optional

from .auction import AuctionConfig, AuctionResult, GROUP_LOSES, GROUP_WINS
from .mechanism import AllocationOutcome, BidTrace
from .numeric import (
    EXACT,
    Num,
    NumericPolicy,
    approx,
    decimal_str,
    exact_str,
    parse_number,
)
from .schedule import (
    CrossMonotonicSchedule,
    EqualSplitSchedule,
    RankedSchedule,
    ShareSchedule,
    TableSchedule,
    identity_weight,
    members,
    parse_subset_key,
    power_weight,
    sqrt_weight,
    subset_key,
)
from .utility import (
    ClosedFormUtility,
    InvalidReportError,
    UtilityReport,
    sample_report,
    validate_knots,
)


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    """A parsed scenario: resolved reports, schedules, environment, policy."""

    n: int
    buyers: list  # raw buyer stanzas
    reports: list  # UtilityReport per buyer
    schedule: ShareSchedule
    named_schedules: dict  # name -> ShareSchedule (includes the primary as "primary")
    auction: Optional[AuctionConfig]
    fixed_price: Optional[Num]
    policy: NumericPolicy
    seed: int

    @property
    def price(self) -> Num:
        """The price the run resolves against: fixed, or the auction threshold."""
        if self.fixed_price is not None:
            return self.fixed_price
        return self.auction.threshold


def _parse_buyer(stanza, index: int):
    """Returns ("knots", knot_tuple) or ("form", ClosedFormUtility)."""
    if not isinstance(stanza, dict) or "kind" not in stanza:
        raise ScenarioError(f"buyer {index}: expected an object with a \"kind\" field")
    kind = stanza["kind"]
    try:
        if kind == "knots":
            knots = tuple(
                (parse_number(x), parse_number(u)) for x, u in stanza["points"]
            )
            violation = validate_knots(knots)
            if violation is not None:
                raise ScenarioError(f"buyer {index}: {violation.describe()}")
            return "knots", knots
        if kind == "linear":
            return "form", ClosedFormUtility.linear(parse_number(stanza["c"]))
        if kind == "power":
            return "form", ClosedFormUtility.power(
                parse_number(stanza["c"]), parse_number(stanza["k"])
            )
        if kind == "log":
            return "form", ClosedFormUtility.log(parse_number(stanza["c"]))
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"buyer {index}: {exc}") from exc
    raise ScenarioError(f"buyer {index}: unknown utility kind {kind!r}")


def _parse_weight(text: str):
    if text == "identity":
        return identity_weight()
    if text == "sqrt":
        return sqrt_weight()
    if text.startswith("power:"):
        return power_weight(parse_number(text.split(":", 1)[1]))
    raise ScenarioError(f"unknown weight function {text!r}")


def parse_schedule(stanza, n: int) -> ShareSchedule:
    if not isinstance(stanza, dict) or "kind" not in stanza:
        raise ScenarioError("schedule stanza must be an object with a \"kind\" field")
    kind = stanza["kind"]
    try:
        if kind == "equal-split":
            return EqualSplitSchedule(n)
        if kind == "cmss":
            shares = {
                key: tuple(parse_number(v) for v in vec)
                for key, vec in stanza["shares"].items()
            }
            return CrossMonotonicSchedule(n, shares)
        if kind == "rras":
            return RankedSchedule(
                [int(i) for i in stanza["order"]],
                [parse_number(b) for b in stanza["base"]],
                _parse_weight(stanza.get("f", "identity")),
            )
        if kind == "table":
            entries = {
                key: (
                    tuple(parse_number(v) for v in cell["x"]),
                    tuple(parse_number(v) for v in cell["y"]),
                )
                for key, cell in stanza["entries"].items()
            }
            return TableSchedule(n, entries)
    except ScenarioError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ScenarioError(f"schedule: {exc}") from exc
    raise ScenarioError(f"unknown schedule kind {kind!r}")


def _parse_auction(stanza) -> AuctionConfig:
    try:
        tie = stanza.get("tie_policy", "group_wins")
        if tie not in (GROUP_WINS, GROUP_LOSES):
            raise ScenarioError(f"unknown tie policy {tie!r}")
        return AuctionConfig(
            reserve=parse_number(stanza.get("reserve", 0)),
            competing_bids=tuple(parse_number(b) for b in stanza.get("competing_bids", [])),
            tie_policy=tie,
        )
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"auction: {exc}") from exc


def _needs_irrational_sampling(parsed_buyers) -> bool:
    for kind, value in parsed_buyers:
        if kind == "form" and (value.kind == "log" or (value.kind == "power" and value.k != 1)):
            return True
    return False


def load_scenario(
    data: dict,
    force_exact: bool = False,
    epsilon: Optional[float] = None,
    seed: Optional[int] = None,
) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    buyers = data.get("buyers")
    if not isinstance(buyers, list) or not buyers:
        raise ScenarioError("scenario needs a non-empty \"buyers\" list")
    n = len(buyers)
    parsed_buyers = [_parse_buyer(b, i) for i, b in enumerate(buyers)]

    if "schedule" not in data:
        raise ScenarioError("scenario needs a \"schedule\" stanza")
    schedule = parse_schedule(data["schedule"], n)
    named = {"primary": schedule}
    for name, stanza in data.get("schedules", {}).items():
        named[name] = parse_schedule(stanza, n)
    for name, sched in named.items():
        if sched.n != n:
            raise ScenarioError(
                f"schedule {name!r} is for {sched.n} buyers but the scenario lists {n}"
            )

    has_auction = "auction" in data
    has_fixed = "fixed_price" in data
    if has_auction == has_fixed:
        raise ScenarioError("scenario needs exactly one of \"auction\" or \"fixed_price\"")
    auction = _parse_auction(data["auction"]) if has_auction else None
    fixed_price = parse_number(data["fixed_price"]) if has_fixed else None
    if fixed_price is not None and fixed_price < 0:
        raise ScenarioError("fixed price must be non-negative")

    irrational = _needs_irrational_sampling(parsed_buyers)
    stanza = data.get("policy", {})
    mode = stanza.get("mode")
    if mode not in (None, "exact", "approx"):
        raise ScenarioError(f"unknown policy mode {mode!r}")
    if force_exact:
        if irrational:
            raise ScenarioError(
                "exact arithmetic requested but a buyer needs irrational sampling (power k<1 or log)"
            )
        policy = EXACT
    elif epsilon is not None:
        policy = approx(epsilon)
    elif mode == "exact":
        if irrational:
            raise ScenarioError(
                "exact arithmetic requested but a buyer needs irrational sampling (power k<1 or log)"
            )
        policy = EXACT
    elif mode == "approx" or irrational:
        policy = approx(float(stanza.get("epsilon", 1e-9)))
    else:
        policy = EXACT

    # Closed forms are sampled at every share point any schedule in the file
    # can hand the buyer, so all runs evaluate them exactly at knots.
    reports = []
    for i, (kind, value) in enumerate(parsed_buyers):
        if kind == "knots":
            reports.append(UtilityReport(value))
        else:
            points = set()
            for sched in named.values():
                points.update(sched.share_points(i))
            reports.append(sample_report(value, {p for p in points if p > 0}))

    return Scenario(
        n=n,
        buyers=buyers,
        reports=reports,
        schedule=schedule,
        named_schedules=named,
        auction=auction,
        fixed_price=fixed_price,
        policy=policy,
        seed=seed if seed is not None else int(data.get("seed", 0)),
    )


def load_scenario_file(path, **kwargs) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return load_scenario(data, **kwargs)
    except InvalidReportError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def bundled_scenario_path(name: str):
    """Filesystem path of a packaged example scenario (e.g. "example1")."""
    return resources.files(__package__).joinpath("scenarios", f"{name}.json")


# ---------------------------------------------------------------------------
# Report serialization


def number_to_json(v: Num, policy: NumericPolicy):
    out = {"decimal": decimal_str(v)}
    if policy.exact:
        out["exact"] = exact_str(v)
    return out


def number_from_json(obj) -> Num:
    if isinstance(obj, dict):
        if "exact" in obj:
            return Fraction(obj["exact"])
        return float(obj["decimal"])
    return parse_number(obj)


def trace_to_json(trace: BidTrace, policy: NumericPolicy) -> dict:
    return {
        "steps": [
            {
                "subset": subset_key(step.subset),
                "beta": number_to_json(step.max_payment, policy),
                "removed": subset_key(step.removed),
            }
            for step in trace.steps
        ],
        "bid": number_to_json(trace.group_bid, policy),
    }


def outcome_to_json(outcome: AllocationOutcome, policy: NumericPolicy) -> dict:
    return {
        "purchased": outcome.purchased,
        "winning_set": subset_key(outcome.winning_set),
        "fractions": [number_to_json(v, policy) for v in outcome.fractions],
        "payments": [number_to_json(v, policy) for v in outcome.payments],
        "price": number_to_json(outcome.price, policy),
    }


def outcome_from_json(data: dict, n: int) -> AllocationOutcome:
    return AllocationOutcome(
        purchased=bool(data["purchased"]),
        winning_set=parse_subset_key(data["winning_set"], n),
        fractions=tuple(number_from_json(v) for v in data["fractions"]),
        payments=tuple(number_from_json(v) for v in data["payments"]),
        price=number_from_json(data["price"]),
    )


def auction_result_to_json(result: AuctionResult, policy: NumericPolicy) -> dict:
    out = {"group_won": result.group_won}
    if result.group_won:
        out["clearing_price"] = number_to_json(result.clearing_price, policy)
    return out


def violations_to_json(result, policy: NumericPolicy) -> dict:
    """Fuzz result as a report document: profiles scanned plus each violation."""
    return {
        "profiles": result.profiles,
        "truncated": result.truncated,
        "violations": [
            {
                "coalition": subset_key(v.coalition),
                "uses_tiebreak": v.uses_tiebreak,
                "deviant_reports": [
                    [[decimal_str(x), decimal_str(u)] for x, u in r.knots]
                    for r in v.deviant_reports
                ],
                "net_before": [number_to_json(p.net, policy) for p in v.before],
                "net_after": [number_to_json(p.net, policy) for p in v.after],
            }
            for v in result.violations
        ],
    }


def violations_to_csv(result) -> str:
    """One row per (violation, coalition member): nets before and after."""
    lines = ["violation,coalition,member,net_before,net_after,uses_tiebreak"]
    for idx, v in enumerate(result.violations):
        for member, before, after in zip(members(v.coalition), v.before, v.after):
            lines.append(
                f'{idx},"{subset_key(v.coalition)}",{member},'
                f"{decimal_str(before.net)},{decimal_str(after.net)},{v.uses_tiebreak}"
            )
    return "\n".join(lines)


def welfare_report_to_json(report, policy: NumericPolicy) -> dict:
    return {
        "mechanism_welfare": number_to_json(report.mechanism_welfare, policy),
        "optimal_welfare": number_to_json(report.optimal_welfare, policy),
        "optimal_division": [number_to_json(z, policy) for z in report.optimal_division],
        "purchased_by_mechanism": report.purchased_by_mechanism,
        "purchasable_optimally": report.purchasable_optimally,
        "inefficiency_flagged": report.inefficiency_flagged,
    }


def welfare_report_to_csv(report) -> str:
    header = (
        "mechanism_welfare,optimal_welfare,purchased_by_mechanism,"
        "purchasable_optimally,inefficiency_flagged,optimal_division"
    )
    division = "/".join(decimal_str(z) for z in report.optimal_division)
    row = (
        f"{decimal_str(report.mechanism_welfare)},{decimal_str(report.optimal_welfare)},"
        f"{report.purchased_by_mechanism},{report.purchasable_optimally},"
        f"{report.inefficiency_flagged},{division}"
    )
    return "\n".join((header, row))
