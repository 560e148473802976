"""Utility reports: piecewise-linear concave functions on [0, 1] worth nothing at 0.

The message space of the group-bidding mechanism is the set of finite knot
lists whose piecewise-linear extrapolation is concave, non-decreasing, zero at
x=0 and defined up to x=1.  Closed forms (linear, power, log) act purely as
generators: :func:`sample_report` turns them into knot lists at the share
points a schedule can actually hand out, which keeps validation decidable and
the engine's evaluations exact at every point it ever queries.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .numeric import Num, NumericPolicy, infer_policy, piecewise_value


class InvalidReportError(ValueError):
    def __init__(self, violation: "Violation"):
        super().__init__(violation.describe())
        self.violation = violation


@dataclass(frozen=True)
class Violation:
    """First failed report invariant, anchored to the knot where it shows."""

    reason: str  # empty | first-knot | x-order | last-knot | decreasing | not-concave
    index: int

    def describe(self) -> str:
        messages = {
            "empty": "knot list is empty",
            "first-knot": f"first knot must be (0, 0), violated at knot {self.index}",
            "x-order": f"knot x values must be strictly increasing at knot {self.index}",
            "last-knot": f"last knot must sit at x=1, violated at knot {self.index}",
            "decreasing": f"values decrease at knot {self.index}",
            "not-concave": f"not concave at knot {self.index}",
        }
        return messages[self.reason]


def validate_knots(knots: Sequence, policy: Optional[NumericPolicy] = None) -> Optional[Violation]:
    """Check the report invariants; return the first violation or None.

    With ``policy=None`` the comparison policy is inferred: exact when every
    coordinate is rational, the default float tolerance otherwise.
    """
    if len(knots) == 0:
        return Violation("empty", 0)
    if policy is None:
        policy = infer_policy(c for knot in knots for c in knot)
    x0, u0 = knots[0]
    if not (policy.eq(x0, 0) and policy.eq(u0, 0)):
        return Violation("first-knot", 0)
    for i in range(1, len(knots)):
        if not policy.lt(knots[i - 1][0], knots[i][0]):
            return Violation("x-order", i)
    if not policy.eq(knots[-1][0], 1):
        return Violation("last-knot", len(knots) - 1)
    for i in range(1, len(knots)):
        if not policy.le(knots[i - 1][1], knots[i][1]):
            return Violation("decreasing", i)
    prev_slope = None
    for i in range(1, len(knots)):
        slope = (knots[i][1] - knots[i - 1][1]) / (knots[i][0] - knots[i - 1][0])
        if prev_slope is not None and not policy.le(slope, prev_slope):
            return Violation("not-concave", i)
        prev_slope = slope
    return None


@dataclass(frozen=True)
class UtilityReport:
    """A validated knot list; evaluation interpolates linearly between knots."""

    knots: tuple

    def __post_init__(self):
        normalized = tuple((x, u) for x, u in self.knots)
        object.__setattr__(self, "knots", normalized)
        violation = validate_knots(normalized)
        if violation is not None:
            raise InvalidReportError(violation)
        object.__setattr__(self, "_xs", tuple(x for x, _ in normalized))
        object.__setattr__(self, "_us", tuple(u for _, u in normalized))

    def value_at(self, x: Num) -> Num:
        if x < 0 or x > 1:
            raise ValueError(f"utility argument {x} outside [0, 1]")
        return piecewise_value(self._xs, self._us, x)

    def scaled(self, factor: Num) -> "UtilityReport":
        return UtilityReport(tuple((x, u * factor) for x, u in self.knots))


def evaluate(report: UtilityReport, x: Num) -> Num:
    """Value of the report at x; exact interpolation, exact at knots."""
    return report.value_at(x)


@dataclass(frozen=True)
class ClosedFormUtility:
    """Catalog generator: c*x, c*x**k, or c*ln(1+x).

    The power exponent must lie in (0, 1]: a zero exponent with c > 0 would be
    worth c at x=0, which no admissible report can be.
    """

    kind: str  # linear | power | log
    c: Num
    k: Optional[Num] = None

    def __post_init__(self):
        if self.kind not in ("linear", "power", "log"):
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.c < 0:
            raise ValueError("coefficient must be non-negative")
        if self.kind == "power":
            if self.k is None or not (0 < self.k <= 1):
                raise ValueError("power exponent must lie in (0, 1]")
        elif self.k is not None:
            raise ValueError(f"{self.kind} utility takes no exponent")

    @classmethod
    def linear(cls, c: Num) -> "ClosedFormUtility":
        return cls("linear", c)

    @classmethod
    def power(cls, c: Num, k: Num) -> "ClosedFormUtility":
        return cls("power", c, k)

    @classmethod
    def log(cls, c: Num) -> "ClosedFormUtility":
        return cls("log", c)

    def value_at(self, x: Num) -> Num:
        if x < 0 or x > 1:
            raise ValueError(f"utility argument {x} outside [0, 1]")
        if self.kind == "linear":
            return self.c * x
        if self.kind == "power":
            if x == 0:
                return self.c * 0
            if x == 1:
                return self.c
            return self.c * x ** self.k
        return self.c * math.log1p(x) if x != 0 else self.c * 0


def sample_report(form: ClosedFormUtility, points: Iterable[Num]) -> UtilityReport:
    """Knot list (p, f(p)) over the given points, with 0 and 1 added if absent."""
    xs = sorted(set(points) | {Fraction(0), Fraction(1)})
    if xs[0] < 0 or xs[-1] > 1:
        raise ValueError("sample points must lie in [0, 1]")
    return UtilityReport(tuple((x, form.value_at(x)) for x in xs))


def random_concave_utility(seed: int, points: Iterable[Num], u_max: Num) -> UtilityReport:
    """Deterministic-in-seed random admissible report on {0} | points.

    Draws non-increasing positive rational slopes and integrates, then scales
    so the top value lands in [0, u_max].  The point at x=1 is added when
    missing since every report must extend to the whole resource.
    """
    if not u_max > 0:
        raise ValueError("u_max must be positive")
    xs = sorted(set(points) | {Fraction(1)})
    if any(not (0 < x <= 1) for x in xs):
        raise ValueError("points must lie in (0, 1]")
    rng = random.Random(seed)
    grain = 10 ** 6
    slopes = sorted(
        (Fraction(rng.randrange(1, grain), grain) for _ in xs), reverse=True
    )
    values = []
    total = Fraction(0)
    prev = Fraction(0)
    for x, slope in zip(xs, slopes):
        total += slope * (x - prev)
        values.append(total)
        prev = x
    scale = u_max * Fraction(rng.randrange(0, grain + 1), grain) / values[-1]
    knots = [(Fraction(0), 0 * scale)]
    knots.extend((x, v * scale) for x, v in zip(xs, values))
    return UtilityReport(tuple(knots))


@dataclass(frozen=True)
class ReportClass:
    """A family of admissible utilities: the full concave class, or c*x**k."""

    kind: str  # concave | power
    k_min: Optional[Num] = None
    k_max: Optional[Num] = None


def concave_class() -> ReportClass:
    return ReportClass("concave")


def power_class(k_min: Num, k_max: Num) -> ReportClass:
    if not (0 < k_min <= k_max <= 1):
        raise ValueError("power family needs 0 < k_min <= k_max <= 1")
    return ReportClass("power", k_min, k_max)
