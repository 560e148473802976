"""Arithmetic policies: exact rational comparisons or float comparisons with a tolerance.

Quantities in this package are plain Python numbers: ``fractions.Fraction``
(or ``int``) wherever a value is exactly representable, ``float`` where an
irrational closed form (sqrt, log) has been sampled.  A ``NumericPolicy``
decides how two such numbers compare; it never changes how they are computed.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

Num = Union[int, float, Fraction]

DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True)
class NumericPolicy:
    """Comparison rules for scalars.

    With ``epsilon=None`` comparisons are exact (meant for rational-valued
    data).  Otherwise two values are equal when they differ by at most
    ``epsilon``, and the strict orderings shrink accordingly: ``lt(a, b)``
    means ``a < b - epsilon`` and ``le(a, b)`` means ``a <= b + epsilon``.
    """

    epsilon: float | None = None

    @property
    def exact(self) -> bool:
        return self.epsilon is None

    def eq(self, a: Num, b: Num) -> bool:
        if self.epsilon is None:
            return a == b
        return abs(a - b) <= self.epsilon

    def lt(self, a: Num, b: Num) -> bool:
        if self.epsilon is None:
            return a < b
        return a < b - self.epsilon

    def le(self, a: Num, b: Num) -> bool:
        if self.epsilon is None:
            return a <= b
        return a <= b + self.epsilon

    def gt(self, a: Num, b: Num) -> bool:
        return self.lt(b, a)

    def ge(self, a: Num, b: Num) -> bool:
        return self.le(b, a)

    def is_zero(self, v: Num) -> bool:
        return self.eq(v, 0)

    def is_positive(self, v: Num) -> bool:
        return self.lt(0, v)


EXACT = NumericPolicy()


def approx(epsilon: float = DEFAULT_EPSILON) -> NumericPolicy:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return NumericPolicy(epsilon)


def is_exact_number(v: Num) -> bool:
    """True for ints and Fractions, False for floats."""
    return isinstance(v, Rational)


def infer_policy(values) -> NumericPolicy:
    """Exact when every value is rational, otherwise the default tolerance."""
    return EXACT if all(is_exact_number(v) for v in values) else approx()


def parse_number(value) -> Fraction:
    """Parse a scenario-file number: int, "p/q" string, or decimal string.

    Raw JSON floats are accepted and converted through their decimal repr, so
    0.9 becomes 9/10 rather than the nearest binary float.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"not a finite number: {value!r}")
        return Fraction(str(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse number {value!r}") from exc
    raise ValueError(f"cannot parse number {value!r}")


def decimal_str(v: Num, sig: int = 15) -> str:
    """Decimal rendering with ``sig`` significant digits."""
    return f"{float(v):.{sig}g}"


def exact_str(v: Num) -> str:
    """"p/q" rendering of a rational value."""
    f = Fraction(v)
    return str(f)


def piecewise_value(xs, us, x):
    """Evaluate the piecewise-linear function through (xs, us) at x.

    ``xs`` must be strictly increasing and bracket ``x``.  Returns the knot
    value without interpolation arithmetic when ``x`` hits a knot, so sampled
    values survive round-trips exactly.
    """
    i = bisect.bisect_right(xs, x) - 1
    if i < 0:
        raise ValueError(f"{x} below the first knot {xs[0]}")
    if xs[i] == x:
        return us[i]
    if i + 1 >= len(xs):
        raise ValueError(f"{x} above the last knot {xs[-1]}")
    x0, x1 = xs[i], xs[i + 1]
    u0, u1 = us[i], us[i + 1]
    return u0 + (u1 - u0) * (x - x0) / (x1 - x0)
