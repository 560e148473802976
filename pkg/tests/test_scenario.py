import json
import math
from fractions import Fraction as F

import pytest

from groupbuy.mechanism import allocate, compute_bid_trace
from groupbuy.scenario import (
    ScenarioError,
    bundled_scenario_path,
    load_scenario,
    load_scenario_file,
    number_from_json,
    number_to_json,
    outcome_from_json,
    outcome_to_json,
    trace_to_json,
)
from groupbuy.schedule import EqualSplitSchedule, RankedSchedule
from groupbuy.numeric import EXACT, approx


def minimal(**overrides):
    data = {
        "buyers": [
            {"kind": "knots", "points": [["0", "0"], ["1/2", "1/2"], ["1", "3/4"]]},
            {"kind": "linear", "c": "1"},
        ],
        "schedule": {"kind": "equal-split"},
        "fixed_price": "0.6",
    }
    data.update(overrides)
    return data


class TestLoading:
    def test_minimal_scenario(self):
        sc = load_scenario(minimal())
        assert sc.n == 2
        assert sc.policy.exact  # knots and linear coefficients are rational
        assert sc.fixed_price == F(3, 5)
        assert isinstance(sc.schedule, EqualSplitSchedule)

    def test_closed_forms_force_tolerance_policy(self):
        data = minimal()
        data["buyers"][1] = {"kind": "power", "c": "1", "k": "1/2"}
        sc = load_scenario(data)
        assert not sc.policy.exact

    def test_exact_refuses_irrational_sampling(self):
        data = minimal()
        data["buyers"][1] = {"kind": "log", "c": "1"}
        with pytest.raises(ScenarioError):
            load_scenario(data, force_exact=True)

    def test_closed_forms_sampled_at_share_points(self):
        data = minimal()
        data["buyers"][1] = {"kind": "power", "c": "1", "k": "1/2"}
        sc = load_scenario(data)
        xs = [x for x, _ in sc.reports[1].knots]
        assert F(1, 2) in xs and F(1) in xs

    def test_needs_exactly_one_price_source(self):
        data = minimal()
        data["auction"] = {"reserve": "0", "competing_bids": ["0.5"]}
        with pytest.raises(ScenarioError):
            load_scenario(data)
        del data["fixed_price"]
        sc = load_scenario(data)
        assert sc.auction is not None and sc.price == F(1, 2)

    def test_invalid_knots_anchor_the_message(self):
        data = minimal()
        data["buyers"][0]["points"] = [["0", "0"], ["1/2", "0.3"], ["1", "0.8"]]
        with pytest.raises(ScenarioError, match="not concave at knot 2"):
            load_scenario(data)

    def test_ranked_schedule_stanza(self):
        data = minimal(schedule={
            "kind": "rras", "order": [1, 0], "base": ["1/2", "1/2"], "f": "power:1/3"
        })
        sc = load_scenario(data)
        assert isinstance(sc.schedule, RankedSchedule)
        assert sc.schedule.weight.power_exponent == F(1, 3)

    def test_unknown_kinds_rejected(self):
        with pytest.raises(ScenarioError):
            load_scenario(minimal(schedule={"kind": "lottery"}))
        data = minimal()
        data["buyers"][0] = {"kind": "quadratic", "c": "1"}
        with pytest.raises(ScenarioError):
            load_scenario(data)

    def test_bundled_scenarios_load(self):
        for name in ("example1", "example2", "section6-table"):
            sc = load_scenario_file(str(bundled_scenario_path(name)))
            assert sc.n == 3

    def test_missing_file_reports_path(self):
        with pytest.raises(ScenarioError, match="no-such-file"):
            load_scenario_file("no-such-file.json")

    def test_bad_json_reports_line(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{\n  \"buyers\": [,]\n}")
        with pytest.raises(ScenarioError, match=r"broken\.json:2"):
            load_scenario_file(str(p))


class TestSerialization:
    def test_number_encoding_exact_mode(self):
        enc = number_to_json(F(9, 20), EXACT)
        assert enc == {"decimal": "0.45", "exact": "9/20"}
        assert number_from_json(enc) == F(9, 20)

    def test_number_encoding_approx_mode(self):
        enc = number_to_json(math.sqrt(0.5), approx())
        assert "exact" not in enc
        assert number_from_json(enc) == pytest.approx(math.sqrt(0.5), abs=1e-13)

    def test_outcome_round_trip_bit_exact(self):
        sc = load_scenario(minimal())
        trace = compute_bid_trace(sc.reports, sc.schedule, sc.policy)
        outcome = allocate(trace, sc.schedule, sc.fixed_price, sc.policy)
        blob = json.dumps(outcome_to_json(outcome, sc.policy))
        back = outcome_from_json(json.loads(blob), sc.n)
        assert back == outcome

    def test_trace_steps_carry_subset_beta_removed(self):
        sc = load_scenario(minimal())
        trace = compute_bid_trace(sc.reports, sc.schedule, sc.policy)
        data = trace_to_json(trace, sc.policy)
        assert set(data["steps"][0]) == {"subset", "beta", "removed"}
        assert data["steps"][0]["subset"] == "0,1"
        assert "bid" in data

    def test_violation_serializers(self):
        from groupbuy.analysis import DeviationViolation, FuzzResult, PreferenceOutcome
        from groupbuy.auction import AuctionConfig
        from groupbuy.scenario import violations_to_csv, violations_to_json
        from groupbuy.utility import UtilityReport

        rep = UtilityReport(((F(0), F(0)), (F(1), F(1))))
        violation = DeviationViolation(
            coalition=0b01,
            truthful_reports=(rep,),
            deviant_reports=(rep,),
            config=AuctionConfig(),
            before=(PreferenceOutcome(F(0), False),),
            after=(PreferenceOutcome(F(1, 12), True),),
            uses_tiebreak=False,
        )
        result = FuzzResult((violation,), profiles=10, truncated=False)
        doc = violations_to_json(result, EXACT)
        assert doc["profiles"] == 10
        assert doc["violations"][0]["coalition"] == "0"
        assert doc["violations"][0]["net_after"][0]["exact"] == "1/12"
        csv = violations_to_csv(result).splitlines()
        assert csv[0].startswith("violation,coalition,member")
        assert csv[1].startswith('0,"0",0,0,')

    def test_welfare_serializers(self):
        from groupbuy.analysis import efficiency_gap
        from groupbuy.scenario import welfare_report_to_csv, welfare_report_to_json

        sc = load_scenario(minimal())
        report = efficiency_gap(sc.reports, sc.schedule, sc.fixed_price, sc.policy)
        doc = welfare_report_to_json(report, sc.policy)
        assert doc["purchased_by_mechanism"] == report.purchased_by_mechanism
        assert "exact" in doc["optimal_welfare"]
        csv = welfare_report_to_csv(report).splitlines()
        assert csv[0].startswith("mechanism_welfare,optimal_welfare")
        assert len(csv) == 2

    def test_schedule_dimension_must_match_buyers(self):
        data = minimal(schedule={
            "kind": "rras", "order": [0, 1, 2],
            "base": ["1/2", "1/4", "1/4"], "f": "identity",
        })
        with pytest.raises(ScenarioError, match="3 buyers but the scenario lists 2"):
            load_scenario(data)
