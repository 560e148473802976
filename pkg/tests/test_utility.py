import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupbuy.utility import (
    ClosedFormUtility,
    InvalidReportError,
    UtilityReport,
    evaluate,
    power_class,
    random_concave_utility,
    sample_report,
    validate_knots,
)


def linear_report():
    return UtilityReport(((F(0), F(0)), (F(1), F(1))))


class TestEvaluate:
    def test_linear_identity(self):
        assert evaluate(linear_report(), F(1, 3)) == F(1, 3)

    def test_knot_hit_returns_sampled_value_exactly(self):
        rep = UtilityReport(((F(0), F(0)), (F(1, 3), 0.577), (F(1), 1.0)))
        assert evaluate(rep, F(1, 3)) == 0.577

    def test_hand_interpolation(self):
        # midpoint of the second segment: (0.7 + 1) / 2
        rep = UtilityReport(((F(0), F(0)), (F(1, 2), F(7, 10)), (F(1), F(1))))
        assert evaluate(rep, F(3, 4)) == F(17, 20)

    def test_zero_at_origin(self):
        assert evaluate(linear_report(), 0) == 0

    @pytest.mark.parametrize("x", [-0.1, F(-1, 2), 1.5])
    def test_domain_error(self, x):
        with pytest.raises(ValueError):
            evaluate(linear_report(), x)


class TestValidate:
    def test_valid_linear(self):
        assert validate_knots([(F(0), F(0)), (F(1, 2), F(1, 2)), (F(1), F(1))]) is None

    def test_rising_slope_is_not_concave(self):
        # slopes 0.6 then 1.0
        v = validate_knots([(F(0), F(0)), (F(1, 2), F(3, 10)), (F(1), F(4, 5))])
        assert v is not None and v.reason == "not-concave" and v.index == 2
        assert "not concave at knot 2" in v.describe()

    def test_nonzero_origin(self):
        v = validate_knots([(F(0), F(1, 10)), (F(1), F(1))])
        assert v is not None and v.reason == "first-knot" and v.index == 0

    def test_must_end_at_one(self):
        v = validate_knots([(F(0), F(0)), (F(1, 2), F(1, 2))])
        assert v is not None and v.reason == "last-knot"

    def test_decreasing_values(self):
        v = validate_knots([(F(0), F(0)), (F(1, 2), F(1, 2)), (F(1), F(1, 4))])
        assert v is not None and v.reason == "decreasing" and v.index == 2

    def test_unsorted_x(self):
        v = validate_knots([(F(0), F(0)), (F(1, 2), F(1, 2)), (F(1, 2), F(3, 4)), (F(1), F(1))])
        assert v is not None and v.reason == "x-order"

    def test_empty(self):
        assert validate_knots([]).reason == "empty"

    def test_constructor_rejects_invalid(self):
        with pytest.raises(InvalidReportError):
            UtilityReport(((F(0), F(0)), (F(1, 2), F(3, 10)), (F(1), F(4, 5))))

    def test_float_noise_tolerated(self):
        # sampled irrational values validate under the inferred tolerance
        knots = [(F(0), 0.0), (F(1, 3), math.log(4 / 3)), (F(1, 2), math.log(1.5)), (F(1), math.log(2))]
        assert validate_knots(knots) is None


class TestClosedForms:
    def test_log_sample_matches_reference_value(self):
        rep = sample_report(ClosedFormUtility.log(1), [F(1, 3), F(1, 2), F(1)])
        got = rep.value_at(F(1, 3))
        assert got == pytest.approx(math.log(4 / 3), abs=1e-15)
        assert abs(got - 0.28768) < 1e-5

    def test_sqrt_sample_matches_reference_value(self):
        rep = sample_report(ClosedFormUtility.power(1, F(1, 2)), [F(1, 3)])
        assert rep.value_at(F(1, 3)) == pytest.approx(1 / math.sqrt(3), abs=1e-15)

    def test_zero_form_gives_zero_report(self):
        rep = sample_report(ClosedFormUtility.linear(0), [F(1, 4), F(2, 3)])
        assert all(u == 0 for _, u in rep.knots)

    def test_sample_adds_endpoints(self):
        rep = sample_report(ClosedFormUtility.linear(1), [F(1, 2)])
        assert rep.knots[0][0] == 0 and rep.knots[-1][0] == 1

    def test_power_exponent_range(self):
        with pytest.raises(ValueError):
            ClosedFormUtility.power(1, 0)
        with pytest.raises(ValueError):
            ClosedFormUtility.power(1, F(3, 2))
        with pytest.raises(ValueError):
            ClosedFormUtility.linear(-1)

    def test_linear_keeps_rationals(self):
        rep = sample_report(ClosedFormUtility.linear(F(2, 3)), [F(1, 2)])
        assert rep.value_at(F(1, 2)) == F(1, 3)

    @pytest.mark.parametrize(
        "form",
        [
            ClosedFormUtility.linear(F(3, 2)),
            ClosedFormUtility.power(2, F(1, 3)),
            ClosedFormUtility.power(F(1, 2), 1),
            ClosedFormUtility.log(F(5, 4)),
        ],
    )
    def test_catalog_samples_validate(self, form):
        rep = sample_report(form, [F(1, 7), F(2, 7), F(1, 2), F(9, 10)])
        assert validate_knots(rep.knots) is None


class TestRandomConcave:
    def test_deterministic_in_seed(self):
        a = random_concave_utility(42, [F(1, 3), F(1, 2)], F(2))
        b = random_concave_utility(42, [F(1, 3), F(1, 2)], F(2))
        assert a == b

    def test_single_point_is_single_segment(self):
        rep = random_concave_utility(7, [F(1)], F(3))
        assert len(rep.knots) == 2
        assert 0 <= rep.knots[-1][1] <= 3

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_output_always_validates(self, seed):
        rep = random_concave_utility(seed, [F(1, 4), F(1, 3), F(2, 3)], F(1))
        assert validate_knots(rep.knots) is None
        assert all(0 <= u <= 1 for _, u in rep.knots)

    def test_rejects_bad_points(self):
        with pytest.raises(ValueError):
            random_concave_utility(1, [F(0)], F(1))
        with pytest.raises(ValueError):
            random_concave_utility(1, [F(1, 2)], 0)


class TestClassProperties:
    """Monotone, concave and star-shaped on a grid, for random class members."""

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_monotone_and_concave_on_grid(self, seed):
        rep = random_concave_utility(seed, [F(1, 5), F(2, 5), F(3, 5), F(4, 5)], F(2))
        grid = [F(k, 16) for k in range(17)]
        vals = [rep.value_at(x) for x in grid]
        assert all(a <= b for a, b in zip(vals, vals[1:]))
        for lam in (F(1, 4), F(1, 2), F(3, 4)):
            for a in (F(0), F(1, 8), F(5, 8)):
                b = F(7, 8)
                mid = lam * a + (1 - lam) * b
                assert rep.value_at(mid) >= lam * rep.value_at(a) + (1 - lam) * rep.value_at(b)

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_star_shaped(self, seed):
        # value per unit share never grows with the share
        rep = random_concave_utility(seed, [F(1, 3), F(1, 2), F(5, 6)], F(1))
        grid = [F(k, 12) for k in range(1, 13)]
        ratios = [rep.value_at(x) / x for x in grid]
        assert all(a >= b for a, b in zip(ratios, ratios[1:]))


def test_power_class_bounds():
    with pytest.raises(ValueError):
        power_class(0, F(1, 2))
    with pytest.raises(ValueError):
        power_class(F(1, 4), F(9, 8))
    cls = power_class(F(1, 8), F(1, 2))
    assert cls.kind == "power"
