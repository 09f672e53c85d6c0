"""Tests for parameter and report models."""

import pytest
from pydantic import ValidationError

from kornlab.models import (
    BlowupReport,
    ConstantEstimate,
    ExponentParams,
    FitReport,
    RoomsSpec,
    RunReport,
    Verdict,
)


class TestExponentParams:
    """Tests for ExponentParams."""

    def test_defaults(self):
        params = ExponentParams()
        assert (params.p, params.q, params.a, params.b) == (2.0, 2.0, 0.0, 0.0)
        assert params.n == 2
        assert params.conjugate == 2.0

    def test_conjugate_of_one(self):
        assert ExponentParams(p=1).conjugate == float("inf")

    @pytest.mark.parametrize(
        "bad",
        [{"p": 0.5}, {"a": -1}, {"s": 0.5}, {"beta": 0}, {"beta": 1.5}, {"n": 1}],
    )
    def test_out_of_range(self, bad):
        with pytest.raises(ValidationError):
            ExponentParams(**bad)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            ExponentParams(gamma=1)

    def test_frozen(self):
        params = ExponentParams()
        with pytest.raises(ValidationError):
            params.p = 3

    def test_json_round_trip(self):
        params = ExponentParams(p=3, b=2.5, sigma=2)
        assert ExponentParams.model_validate_json(params.model_dump_json()) == params


class TestRoomsSpec:
    """Tests for RoomsSpec."""

    def test_geometric_sides(self):
        assert RoomsSpec(ratio=4, rooms=3).sides() == [0.25, 0.0625, 0.015625]

    def test_explicit_sides(self):
        spec = RoomsSpec(rooms=2, room_sides=[0.3, 0.1])
        assert spec.sides() == [0.3, 0.1]

    def test_side_count_mismatch(self):
        with pytest.raises(ValidationError, match="room sides given"):
            RoomsSpec(rooms=3, room_sides=[0.3, 0.1])

    def test_sides_must_decrease(self):
        with pytest.raises(ValidationError, match="strictly decreasing"):
            RoomsSpec(rooms=2, room_sides=[0.1, 0.3])

    def test_ratio_lower_bound(self):
        with pytest.raises(ValidationError):
            RoomsSpec(ratio=2)


class TestReports:
    """Tests for report models."""

    def test_verdict_values(self):
        assert Verdict.CONSISTENT_HOLDS.value == "consistent-holds"
        assert Verdict("fails") is Verdict.FAILS

    def test_estimate_dump_omits_maximizer(self):
        est = ConstantEstimate(
            kind="poincare", lower_bound=0.1, method="eigen", maximizer=[[1.0, 2.0]]
        )
        assert "maximizer" not in est.model_dump()
        assert est.maximizer == [[1.0, 2.0]]

    def test_fit_report_defaults(self):
        report = FitReport()
        assert report.samples == []
        assert report.verdict is Verdict.INCONCLUSIVE

    def test_blowup_rows(self):
        report = BlowupReport(
            params=ExponentParams(),
            kind="korn",
            rows=[(1, 0.25, 4.0, -1.0)],
            predicted=Verdict.FAILS,
            growth=1.0,
            verdict=Verdict.MISMATCH,
        )
        assert report.model_dump(mode="json")["rows"] == [[1, 0.25, 4.0, -1.0]]

    def test_run_report(self):
        report = RunReport(command="scaling predict", version="0.1.0", seed=3)
        assert report.timings == {}
        assert report.model_dump()["seed"] == 3
