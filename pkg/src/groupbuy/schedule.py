"""Sharing schedules: per-subset resource and payment share vectors.

A schedule fixes, before any report is solicited, how the resource and the
payment would be divided among every possible subset of buyers.  Subsets are
plain int bitmasks over buyer indices 0..n-1 (n <= 32).

The incentive properties of the mechanism rest on the schedule's monotonicity:
a buyer who cannot cover its payment share of some price C with its utility
for its resource share in a set must not be able to in any smaller set either.
:func:`validate_monotonicity` decides this with a closed-form per-pair
criterion (a derived reduction, not published anywhere; see the function
docstring), and :func:`brute_force_monotonicity_check` is its permanent
sampling cross-check.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .numeric import EXACT, Num, NumericPolicy, piecewise_value
from .utility import (
    ClosedFormUtility,
    ReportClass,
    UtilityReport,
    concave_class,
    random_concave_utility,
)


# ---------------------------------------------------------------------------
# Buyer-set bitmasks


def full_mask(n: int) -> int:
    return (1 << n) - 1


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def members(mask: int) -> tuple:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def member_count(mask: int) -> int:
    return mask.bit_count()


def is_subset(a: int, b: int) -> bool:
    return a & ~b == 0


def nonempty_subsets(mask: int) -> Iterator[int]:
    """All non-empty submasks of ``mask``, largest first."""
    sub = mask
    while sub:
        yield sub
        sub = (sub - 1) & mask


def subset_key(mask: int) -> str:
    """Sorted comma-joined index string, e.g. "0,2"; empty set is ""."""
    return ",".join(str(i) for i in members(mask))


def parse_subset_key(text: str, n: int) -> int:
    if text.strip() == "":
        return 0
    mask = 0
    for part in text.split(","):
        i = int(part)
        if not 0 <= i < n:
            raise ValueError(f"buyer index {i} outside 0..{n - 1}")
        mask |= 1 << i
    return mask


# ---------------------------------------------------------------------------
# Schedules


class ScheduleError(ValueError):
    pass


class DegenerateScheduleError(ScheduleError):
    def __init__(self, message: str, subset: int):
        super().__init__(message)
        self.subset = subset


@dataclass(frozen=True)
class SharePair:
    """Resource and payment share vectors bound to one subset."""

    resource: tuple
    payment: tuple


def _check_share_vector(values: Sequence, subset: int, n: int, label: str, policy: NumericPolicy):
    if len(values) != n:
        raise ScheduleError(f"{label} shares for {{{subset_key(subset)}}} must have {n} entries")
    total = sum(values)
    for i, v in enumerate(values):
        if v < 0:
            raise ScheduleError(f"negative {label} share for buyer {i} in {{{subset_key(subset)}}}")
        if v > 0 and not subset >> i & 1:
            raise ScheduleError(
                f"positive {label} share for buyer {i} outside subset {{{subset_key(subset)}}}"
            )
    if not policy.eq(total, 1):
        raise ScheduleError(f"{label} shares for {{{subset_key(subset)}}} sum to {total}, not 1")


class ShareSchedule:
    """Base class: deterministic map from non-empty subsets to share pairs."""

    def __init__(self, n: int):
        if not 1 <= n <= 32:
            raise ScheduleError("buyer count must lie in 1..32")
        self.n = n
        self._cache: dict = {}

    def shares_for(self, subset: int) -> SharePair:
        if subset == 0:
            raise ScheduleError("shares are undefined for the empty set")
        if not is_subset(subset, full_mask(self.n)):
            raise ScheduleError(f"subset {bin(subset)} outside buyer range 0..{self.n - 1}")
        pair = self._cache.get(subset)
        if pair is None:
            pair = self._compute(subset)
            self._cache[subset] = pair
        return pair

    def _compute(self, subset: int) -> SharePair:
        raise NotImplementedError

    def share_points(self, buyer: int) -> tuple:
        """All resource shares the buyer can receive, across every subset."""
        if self.n > 16:
            raise ScheduleError("share-point enumeration is capped at 16 buyers")
        points = set()
        bit = 1 << buyer
        for mask in nonempty_subsets(full_mask(self.n)):
            if mask & bit:
                points.add(self.shares_for(mask).resource[buyer])
        return tuple(sorted(points))


class EqualSplitSchedule(ShareSchedule):
    """1/|A| resource and payment share for every member."""

    def _compute(self, subset: int) -> SharePair:
        share = Fraction(1, member_count(subset))
        vec = tuple(share if subset >> i & 1 else Fraction(0) for i in range(self.n))
        return SharePair(vec, vec)

    def share_points(self, buyer: int) -> tuple:
        return tuple(Fraction(1, k) for k in range(self.n, 0, -1))


class TableSchedule(ShareSchedule):
    """Explicit per-subset share pairs; only sensible for small n."""

    def __init__(self, n: int, entries: Mapping, policy: NumericPolicy = EXACT):
        super().__init__(n)
        table = {}
        for key, value in entries.items():
            mask = parse_subset_key(key, n) if isinstance(key, str) else int(key)
            if isinstance(value, SharePair):
                pair = value
            else:
                xs, ys = value
                pair = SharePair(tuple(xs), tuple(ys))
            _check_share_vector(pair.resource, mask, n, "resource", policy)
            _check_share_vector(pair.payment, mask, n, "payment", policy)
            table[mask] = pair
        self._table = table

    def _compute(self, subset: int) -> SharePair:
        try:
            return self._table[subset]
        except KeyError:
            raise ScheduleError(f"no shares defined for subset {{{subset_key(subset)}}}") from None


class CrossMonotonicSchedule(ShareSchedule):
    """Payment shares equal to resource shares, from an explicit resource table.

    The table is declared cross-monotonic (shares never shrink as the set
    shrinks) but not verified here; run :func:`validate_cross_monotonic`.
    """

    def __init__(self, n: int, resource: Mapping, policy: NumericPolicy = EXACT):
        super().__init__(n)
        table = {}
        for key, xs in resource.items():
            mask = parse_subset_key(key, n) if isinstance(key, str) else int(key)
            vec = tuple(xs)
            _check_share_vector(vec, mask, n, "resource", policy)
            table[mask] = vec
        self._table = table

    def _compute(self, subset: int) -> SharePair:
        try:
            vec = self._table[subset]
        except KeyError:
            raise ScheduleError(f"no shares defined for subset {{{subset_key(subset)}}}") from None
        return SharePair(vec, vec)


# ---------------------------------------------------------------------------
# Weight functions for ranked schedules


@dataclass(frozen=True)
class WeightFunction:
    """Concave non-negative weight f on [0, 1], used for payment shares."""

    name: str  # identity | sqrt | power | concave-knots
    exponent: Optional[Num] = None
    knots: Optional[tuple] = None

    def __call__(self, x: Num) -> Num:
        if self.name == "identity":
            return x
        if self.name in ("sqrt", "power"):
            k = Fraction(1, 2) if self.name == "sqrt" else self.exponent
            if x == 0:
                return 0 * x
            if x == 1:
                return 1 * x
            return x ** k
        xs = tuple(p[0] for p in self.knots)
        us = tuple(p[1] for p in self.knots)
        return piecewise_value(xs, us, x)

    @property
    def power_exponent(self) -> Optional[Num]:
        """Exponent when the weight is a pure power of x, else None."""
        if self.name == "identity":
            return 1
        if self.name == "sqrt":
            return Fraction(1, 2)
        if self.name == "power":
            return self.exponent
        return None


def identity_weight() -> WeightFunction:
    return WeightFunction("identity")


def sqrt_weight() -> WeightFunction:
    return WeightFunction("sqrt")


def power_weight(k: Num) -> WeightFunction:
    if not 0 < k <= 1:
        raise ValueError("power weight exponent must lie in (0, 1] to stay concave")
    return WeightFunction("power", exponent=k)


def concave_weight(knots: Sequence) -> WeightFunction:
    """Explicit piecewise-linear weight; must be concave, non-negative, on [0, 1]."""
    pts = tuple((x, u) for x, u in knots)
    if len(pts) < 2 or pts[0][0] != 0 or pts[-1][0] != 1:
        raise ValueError("weight knots must run from x=0 to x=1")
    for i in range(1, len(pts)):
        if not pts[i - 1][0] < pts[i][0]:
            raise ValueError("weight knot x values must be strictly increasing")
    if any(u < 0 for _, u in pts):
        raise ValueError("weight values must be non-negative")
    prev = None
    for i in range(1, len(pts)):
        slope = (pts[i][1] - pts[i - 1][1]) / (pts[i][0] - pts[i - 1][0])
        if prev is not None and slope > prev:
            raise ValueError("weight must be concave")
        prev = slope
    return WeightFunction("concave-knots", knots=pts)


# ---------------------------------------------------------------------------
# Ranked schedule (departing buyers' shares accrue to the top-ranked survivor)


def rras_resource_shares(order: Sequence[int], base: Sequence, subset: int) -> tuple:
    """Resource shares for a subset under the ranked hand-over rule.

    The highest-ranked member keeps its base share plus every base share of
    the buyers outside the subset; other members keep their base shares.
    """
    if subset == 0:
        raise ScheduleError("shares are undefined for the empty set")
    n = len(order)
    top = next(i for i in order if subset >> i & 1)
    outside = sum(base[j] for j in range(n) if not subset >> j & 1)
    return tuple(
        (base[i] + outside if i == top else base[i]) if subset >> i & 1 else 0 * base[i]
        for i in range(n)
    )


def rras_payment_shares(weight: WeightFunction, resource: Sequence, subset: int) -> tuple:
    """Payment shares proportional to the weight of each member's resource share."""
    weights = [weight(resource[i]) if subset >> i & 1 else None for i in range(len(resource))]
    total = sum(w for w in weights if w is not None)
    if not total > 0:
        raise DegenerateScheduleError(
            f"weight sum vanishes on subset {{{subset_key(subset)}}}", subset
        )
    return tuple(w / total if w is not None else 0 for w in weights)


class RankedSchedule(ShareSchedule):
    """Ranked hand-over resource shares with weight-proportional payment shares."""

    def __init__(
        self,
        order: Sequence[int],
        base: Sequence,
        weight: WeightFunction = identity_weight(),
        policy: NumericPolicy = EXACT,
    ):
        n = len(order)
        super().__init__(n)
        if sorted(order) != list(range(n)):
            raise ScheduleError("rank order must be a permutation of 0..n-1")
        if len(base) != n:
            raise ScheduleError("base shares must have one entry per buyer")
        if any(b < 0 for b in base):
            raise ScheduleError("base shares must be non-negative")
        if not policy.eq(sum(base), 1):
            raise ScheduleError(f"base shares sum to {sum(base)}, not 1")
        self.order = tuple(order)
        self.base = tuple(base)
        self.weight = weight

    def _compute(self, subset: int) -> SharePair:
        resource = rras_resource_shares(self.order, self.base, subset)
        payment = rras_payment_shares(self.weight, resource, subset)
        return SharePair(resource, payment)


def rras_resource_table(order: Sequence[int], base: Sequence) -> dict:
    """Resource shares of the ranked rule for every non-empty subset.

    Handy for building a cross-monotonic twin (payment = resource) of a ranked
    schedule; the ranked rule's resource shares are cross-monotonic.
    """
    n = len(order)
    if n > 16:
        raise ScheduleError("table expansion is capped at 16 buyers")
    return {
        mask: rras_resource_shares(order, base, mask)
        for mask in nonempty_subsets(full_mask(n))
    }


# ---------------------------------------------------------------------------
# Validators


@dataclass(frozen=True)
class CrossMonotonicityWitness:
    """x_buyer grew when the set grew: x_buyer(subset_a) < x_buyer(subset_b), A within B."""

    buyer: int
    subset_a: int
    subset_b: int


def validate_cross_monotonic(
    schedule: ShareSchedule, max_n: int = 12, policy: NumericPolicy = EXACT
) -> Optional[CrossMonotonicityWitness]:
    """Exhaustive cross-monotonicity check via single-buyer deletions.

    Checking every (B, B minus one buyer) pair suffices: the inequality chains
    along nested subsets, so any violating pair implies a violating one-step
    pair.
    """
    n = schedule.n
    if n > max_n:
        raise ScheduleError(f"cross-monotonicity check capped at {max_n} buyers")
    for b_mask in nonempty_subsets(full_mask(n)):
        if member_count(b_mask) < 2:
            continue
        x_b = schedule.shares_for(b_mask).resource
        for k in members(b_mask):
            a_mask = b_mask & ~(1 << k)
            x_a = schedule.shares_for(a_mask).resource
            for i in members(a_mask):
                if policy.lt(x_a[i], x_b[i]):
                    return CrossMonotonicityWitness(i, a_mask, b_mask)
    return None


@dataclass(frozen=True)
class MonotonicityWitness:
    """A pair of nested subsets plus a concrete (utility, constant) breaking the rule.

    The utility satisfies utility(x_buyer(subset_b)) < constant * y_buyer(subset_b)
    while utility(x_buyer(subset_a)) >= constant * y_buyer(subset_a).
    """

    buyer: int
    subset_a: int
    subset_b: int
    utility: UtilityReport
    constant: Num


def _zero_report() -> UtilityReport:
    return UtilityReport(((Fraction(0), Fraction(0)), (Fraction(1), Fraction(0))))


def _linear_report(slope: Num) -> UtilityReport:
    return UtilityReport(((Fraction(0), 0 * slope), (Fraction(1), slope)))


def _ramp_report(x: Num, value: Num) -> UtilityReport:
    return UtilityReport(((Fraction(0), 0 * value), (x, value), (Fraction(1), value)))


def _power_witness_report(k: Num, x_a: Num, x_b: Num) -> UtilityReport:
    points = {p for p in (x_a, x_b) if 0 < p <= 1}
    return UtilityReport(
        tuple(
            sorted(
                {(Fraction(0), Fraction(0)), (Fraction(1), Fraction(1))}
                | {(p, p ** k) for p in points}
            )
        )
    )


def _pair_violation(x_a, x_b, y_a, y_b, policy: NumericPolicy, report_class: ReportClass):
    """Closed-form test of one (buyer, A within B) pair; returns (utility, C) or None.

    Derived reduction of the for-all-class-members condition to share
    arithmetic.  The degenerate cases are shared:

    * y_b = 0: nothing to check, no utility can fall below a zero bound.
    * y_a = 0 (y_b > 0): the zero utility passes the bound in B, fails in A.
    * x_b = 0 (y_a, y_b > 0): every utility is worth 0 in B, so x_a must be 0
      too or a steeply-rising member fails in A.
    * x_a = 0 < x_b: fine regardless of payments, the bound in A is 0 < C*y_a.

    With both shares positive the requirement is (x_a/x_b)**k <= y_a/y_b for
    every admissible exponent k.  For the power family that extremizes at
    k_max when x_a >= x_b and k_min otherwise; for the full concave class the
    extremal members are linear functions (k=1) and ramps that rise to a
    plateau (the k -> 0 limit), giving y_a/y_b >= x_a/x_b when x_a >= x_b and
    y_a >= y_b when x_a < x_b.
    """
    if not policy.is_positive(y_b):
        return None
    if not policy.is_positive(y_a):
        return _zero_report(), Fraction(1)
    if not policy.is_positive(x_b):
        if policy.is_positive(x_a):
            if report_class.kind == "power":
                k = report_class.k_max
                return _power_witness_report(k, x_a, x_b).scaled(2 * y_a / x_a ** k), Fraction(1)
            return _linear_report(2 * y_a / x_a), Fraction(1)
        return None
    if not policy.is_positive(x_a):
        return None
    if report_class.kind == "power":
        k = report_class.k_max if x_a >= x_b else report_class.k_min
        va, vb = x_a ** k, x_b ** k
        if policy.lt(y_a * vb, y_b * va):
            return _power_witness_report(k, x_a, x_b), (vb / y_b + va / y_a) / 2
        return None
    if policy.lt(x_a, x_b):
        if policy.lt(y_a, y_b):
            return _ramp_report(x_a, (y_a + y_b) / 2), Fraction(1)
        return None
    if policy.lt(y_a * x_b, y_b * x_a):
        return _linear_report(Fraction(1)), (x_b / y_b + x_a / y_a) / 2
    return None


def validate_monotonicity(
    schedule: ShareSchedule,
    max_n: int = 12,
    policy: NumericPolicy = EXACT,
    report_class: Optional[ReportClass] = None,
) -> Optional[MonotonicityWitness]:
    """Closed-form monotonicity check over all single-buyer deletions.

    The condition is relative to a utility class (default: the full concave
    class).  The per-pair criterion (see :func:`_pair_violation`) is a derived
    reduction, not a published result; :func:`brute_force_monotonicity_check`
    is the independent sampling oracle kept alongside it.  One-step pairs
    suffice because the defining implication composes along nested chains.
    """
    if report_class is None:
        report_class = concave_class()
    n = schedule.n
    if n > max_n:
        raise ScheduleError(f"monotonicity check capped at {max_n} buyers")
    for b_mask in nonempty_subsets(full_mask(n)):
        if member_count(b_mask) < 2:
            continue
        pair_b = schedule.shares_for(b_mask)
        for k in members(b_mask):
            a_mask = b_mask & ~(1 << k)
            pair_a = schedule.shares_for(a_mask)
            for i in members(a_mask):
                found = _pair_violation(
                    pair_a.resource[i], pair_b.resource[i],
                    pair_a.payment[i], pair_b.payment[i],
                    policy, report_class,
                )
                if found is not None:
                    utility, constant = found
                    return MonotonicityWitness(i, a_mask, b_mask, utility, constant)
    return None


def _random_submask(rng: random.Random, mask: int) -> int:
    sub = 0
    for i in members(mask):
        if rng.random() < 0.6:
            sub |= 1 << i
    if sub == 0:
        sub = 1 << rng.choice(members(mask))
    return sub


def brute_force_monotonicity_check(
    schedule: ShareSchedule,
    samples: int,
    seed: int = 0,
    policy: NumericPolicy = EXACT,
    u_max: Num = 2,
    report_class: Optional[ReportClass] = None,
) -> Optional[MonotonicityWitness]:
    """Sampling oracle: directly test the bound-carrying implication.

    Draws random (utility, C, buyer, A within B) tuples and checks that
    utility(x_i(B)) < C*y_i(B) forces utility(x_i(A)) < C*y_i(A).  Utilities
    rotate through random class members (concave reports, linears, ramps and
    the zero report, or powers when the class is a power family); besides a
    uniform draw, C is also tried at the midpoint of the candidate violation
    window so genuine violations are found quickly.
    """
    if report_class is None:
        report_class = concave_class()
    n = schedule.n
    if n > 8:
        raise ScheduleError("brute-force monotonicity oracle capped at 8 buyers")
    rng = random.Random(seed)
    masks = list(nonempty_subsets(full_mask(n)))
    grain = 10 ** 6
    for trial in range(samples):
        b_mask = rng.choice(masks)
        a_mask = _random_submask(rng, b_mask)
        i = rng.choice(members(a_mask))
        pair_a = schedule.shares_for(a_mask)
        pair_b = schedule.shares_for(b_mask)
        x_a, y_a = pair_a.resource[i], pair_a.payment[i]
        x_b, y_b = pair_b.resource[i], pair_b.payment[i]
        if not policy.is_positive(y_b):
            continue

        shape = trial % 4
        if report_class.kind == "power":
            if shape == 3:
                utility = _zero_report()
            else:
                k_lo, k_hi = Fraction(report_class.k_min), Fraction(report_class.k_max)
                k = (k_hi, k_lo, k_lo + (k_hi - k_lo) * Fraction(rng.randrange(grain), grain))[shape]
                scale = u_max * Fraction(rng.randrange(1, grain), grain)
                utility = _power_witness_report(k, x_a, x_b).scaled(scale)
        elif shape == 0:
            pts = {x for x in (x_a, x_b) if 0 < x <= 1}
            utility = random_concave_utility(rng.randrange(2 ** 32), pts, u_max)
        elif shape == 1:
            utility = _linear_report(u_max * Fraction(rng.randrange(0, grain + 1), grain))
        elif shape == 2:
            pos = x_a if 0 < x_a < 1 else (x_b if 0 < x_b < 1 else Fraction(1, 2))
            utility = _ramp_report(pos, u_max * Fraction(rng.randrange(0, grain + 1), grain))
        else:
            utility = _zero_report()

        ratio_b = utility.value_at(x_b) / y_b
        if policy.is_positive(y_a):
            ratio_a = utility.value_at(x_a) / y_a
            window_hi = ratio_a
        else:
            window_hi = ratio_b + u_max
        candidates = [Fraction(rng.randrange(1, grain), grain) * (2 * ratio_b + 1)]
        if window_hi > ratio_b:
            candidates.append((ratio_b + window_hi) / 2)
        for c in candidates:
            if not c > 0:
                continue
            premise = policy.lt(utility.value_at(x_b), c * y_b)
            conclusion = policy.lt(utility.value_at(x_a), c * y_a)
            if premise and not conclusion:
                return MonotonicityWitness(i, a_mask, b_mask, utility, c)
    return None


# ---------------------------------------------------------------------------
# Single crossing


@dataclass(frozen=True)
class SingleCrossingCounterexample:
    """C*weight exceeds the utility at x_above but not at the later x_not_above."""

    utility: Union[UtilityReport, ClosedFormUtility]
    constant: Num
    x_above: Num
    x_not_above: Num


def _verify_crossing_failure(weight, utility, constant, x_above, x_not_above) -> bool:
    return (
        constant * weight(x_above) > utility.value_at(x_above)
        and not constant * weight(x_not_above) > utility.value_at(x_not_above)
    )


def single_crossing_check(
    weight: WeightFunction, report_class: ReportClass, grid: int = 64, seed: int = 0
) -> Optional[SingleCrossingCounterexample]:
    """Does C*weight cross every class member at most once, from below?

    Pure power weights against the power family c*x**k admit a closed form:
    the property holds exactly when the weight exponent is at least k_max
    (C*x**q / (c*x**k) is non-decreasing iff q >= k).  The identity weight
    holds against the whole concave class since chords of a concave function
    through the origin only flatten.  Everything else falls back to a grid
    search over sampled class members; a None result is then only
    "holds at this resolution".
    """
    if grid < 16:
        raise ValueError("grid must have at least 16 points")
    q = weight.power_exponent
    if q is not None and report_class.kind == "power":
        if q >= report_class.k_max:
            return None
        utility = ClosedFormUtility.power(1, report_class.k_max)
        constant = Fraction(1, 2) ** (report_class.k_max - q)
        candidate = SingleCrossingCounterexample(utility, constant, Fraction(1, 4), Fraction(1))
        if _verify_crossing_failure(weight, utility, constant, candidate.x_above, 1):
            return candidate
    elif q is not None and report_class.kind == "concave":
        if q == 1:
            return None
        utility = ClosedFormUtility.linear(1)
        constant = Fraction(1, 2) ** (1 - q)
        candidate = SingleCrossingCounterexample(utility, constant, Fraction(1, 4), Fraction(1))
        if _verify_crossing_failure(weight, utility, constant, candidate.x_above, 1):
            return candidate

    xs = [Fraction(j, grid) for j in range(grid + 1)]
    rng = random.Random(seed)
    samples: list = []
    if report_class.kind == "power":
        lo, hi = Fraction(report_class.k_min), Fraction(report_class.k_max)
        for j in range(9):
            k = lo + (hi - lo) * Fraction(j, 8)
            samples.append(ClosedFormUtility.power(1, k))
    else:
        samples.append(ClosedFormUtility.linear(1))
        samples.append(_zero_report())
        for j in range(1, 8):
            samples.append(_ramp_report(Fraction(j, 8), Fraction(1)))
        for _ in range(4):
            samples.append(random_concave_utility(rng.randrange(2 ** 32), xs[1:], 1))

    for utility in samples:
        fvals = [weight(x) for x in xs]
        uvals = [utility.value_at(x) for x in xs]
        ratios = sorted({u / f for f, u in zip(fvals, uvals) if f > 0})
        constants = {Fraction(1, 2), Fraction(1), Fraction(2)}
        for a, b in zip(ratios, ratios[1:]):
            constants.add((a + b) / 2)
        for r in ratios:
            constants.add(r * Fraction(999, 1000))
            constants.add(r * Fraction(1001, 1000))
        for c in sorted(constants):
            if not c > 0:
                continue
            above_at = None
            for x, f, u in zip(xs, fvals, uvals):
                if c * f > u:
                    if above_at is None:
                        above_at = x
                elif above_at is not None:
                    return SingleCrossingCounterexample(utility, c, above_at, x)
    return None
