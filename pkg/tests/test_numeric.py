from fractions import Fraction as F

import pytest

from groupbuy.numeric import (
    EXACT,
    approx,
    decimal_str,
    exact_str,
    infer_policy,
    parse_number,
)


def test_exact_policy_compares_exactly():
    assert EXACT.eq(F(1, 3), F(1, 3))
    assert not EXACT.eq(F(1, 3), F(1, 3) + F(1, 10**12))
    assert EXACT.lt(F(1, 3), F(1, 2))
    assert EXACT.exact


def test_approx_policy_tolerates_epsilon():
    pol = approx(1e-9)
    assert pol.eq(0.5, 0.5 + 1e-12)
    assert not pol.eq(0.5, 0.5 + 1e-6)
    # strict comparisons shrink: a < b requires a clear margin
    assert not pol.lt(0.5, 0.5 + 1e-12)
    assert pol.lt(0.5, 0.5 + 1e-6)
    assert pol.le(0.5 + 1e-12, 0.5)
    assert pol.is_positive(1e-6)
    assert not pol.is_positive(1e-12)


def test_approx_requires_positive_epsilon():
    with pytest.raises(ValueError):
        approx(0)


@pytest.mark.parametrize(
    "text,expected",
    [("3/4", F(3, 4)), ("0.9", F(9, 10)), ("2", F(2)), ("-1/2", F(-1, 2)), (0.25, F(1, 4)), (3, F(3))],
)
def test_parse_number(text, expected):
    assert parse_number(text) == expected


def test_parse_number_reads_floats_decimally():
    assert parse_number(0.1) == F(1, 10)


@pytest.mark.parametrize("bad", ["", "x", "1/0", float("inf"), True, None])
def test_parse_number_rejects_garbage(bad):
    with pytest.raises(ValueError):
        parse_number(bad)


def test_renderings_round_trip():
    v = F(9, 20)
    assert parse_number(exact_str(v)) == v
    assert decimal_str(v) == "0.45"
    assert decimal_str(F(1, 3)).startswith("0.3333333333333")


def test_infer_policy():
    assert infer_policy([F(1, 2), 3]).exact
    assert not infer_policy([F(1, 2), 0.5]).exact
