"""Tests for quotients, constant estimators, blow-up and the Korn to Poincaré pipeline."""

import math

import numpy as np
import pytest

from kornlab.constants import (
    QuotientProblem,
    admissible_rectangles,
    blowup_experiment,
    check_resolution,
    estimate_constant,
    korn_poincare_pipeline,
    korn_quotient,
    neumann_oracle,
    poincare_quotient,
    quotient,
    ramp,
)
from kornlab.errors import ConstantsError
from kornlab.fields import Grid, ScalarField, VectorField, example_field, rotation_test_field
from kornlab.gallery import rooms_and_corridors, strip
from kornlab.models import ExponentParams, RoomsSpec, Verdict

CUBE = (0.375, 0.375, 0.625, 0.625)


@pytest.fixture
def grid32(unit_square):
    return Grid.build(unit_square, 1 / 32)


class TestQuotients:
    """Tests for the Poincaré and Korn quotients."""

    def test_poincare_homogeneous(self, grid32):
        u = ScalarField.from_function(grid32, lambda x, y: np.sin(3 * x) + y**2)
        params = ExponentParams(p=3, a=1, b=1)
        q = poincare_quotient(u, params)
        scaled = ScalarField(grid32, 5.0 * u.values + 2.0)
        assert poincare_quotient(scaled, params) == pytest.approx(q, rel=1e-10)

    def test_korn_homogeneous(self, grid32):
        v = VectorField.from_function(grid32, lambda x, y: (x * y, np.cos(x) - y))
        params = ExponentParams(b=1)
        q = korn_quotient(v, params)
        scaled = VectorField(grid32, -3.0 * v.values)
        assert korn_quotient(scaled, params) == pytest.approx(q, rel=1e-10)

    def test_constant_has_zero_denominator(self, grid32):
        with pytest.raises(ConstantsError, match="u is constant"):
            poincare_quotient(ScalarField(grid32, np.ones(len(grid32))), ExponentParams())

    def test_zero_field(self, grid32):
        with pytest.raises(ConstantsError, match="zero denominator"):
            korn_quotient(VectorField(grid32, np.zeros((len(grid32), 2))), ExponentParams())

    def test_cube_kinds_need_cube(self, grid32):
        v = VectorField.from_function(grid32, lambda x, y: (x, y))
        with pytest.raises(ConstantsError, match="reference cube"):
            korn_quotient(v, ExponentParams(), kind="korn_tilde")

    def test_quotient_dispatch(self, grid32):
        u = ScalarField.from_function(grid32, lambda x, y: x)
        problem = QuotientProblem("poincare", ExponentParams(), grid32)
        assert quotient(problem, u) == pytest.approx(poincare_quotient(u, ExponentParams()))


class TestProblem:
    """Tests for QuotientProblem validation."""

    def test_unknown_kind(self, grid32):
        with pytest.raises(ConstantsError, match="unknown kind"):
            QuotientProblem("stokes", ExponentParams(), grid32)

    def test_missing_cube(self, grid32):
        with pytest.raises(ConstantsError, match="needs a reference cube"):
            QuotientProblem("korn_lp_cube", ExponentParams(), grid32)

    def test_cube_touching_boundary(self, grid32):
        with pytest.raises(ConstantsError, match="compactly inside"):
            QuotientProblem("korn_tilde", ExponentParams(), grid32, cube=(0.0, 0.0, 0.5, 0.5))

    def test_korn_needs_p_above_one(self, grid32):
        with pytest.raises(ConstantsError, match="p > 1"):
            QuotientProblem("korn", ExponentParams(p=1), grid32)

    def test_thin_strip_under_resolved(self):
        grid = Grid.build(strip(1, 0.05), 1 / 64)
        with pytest.raises(ConstantsError, match="narrowest feature"):
            check_resolution(grid)


class TestEstimate:
    """Tests for estimate_constant and the Neumann oracle."""

    def test_poincare_square(self, unit_square):
        grid = Grid.build(unit_square, 1 / 64)
        est = estimate_constant(QuotientProblem("poincare", ExponentParams(), grid))
        assert est.method == "eigen"
        assert est.converged
        assert est.lower_bound == pytest.approx(1 / math.pi**2, rel=0.05)

    def test_matches_oracle(self, grid32):
        est = estimate_constant(QuotientProblem("poincare", ExponentParams(), grid32))
        assert est.lower_bound == pytest.approx(neumann_oracle(grid32), rel=0.05)

    def test_oracle_size_limit(self, unit_square):
        with pytest.raises(ConstantsError, match="6000 cells"):
            neumann_oracle(Grid.build(unit_square, 1 / 128))

    def test_korn_dominates_warm_start(self, grid32):
        params = ExponentParams(b=2)
        problem = QuotientProblem("korn", params, grid32)
        warm = rotation_test_field(ScalarField(grid32, grid32.rho.copy()), (0.5, 0.5))
        est = estimate_constant(problem)
        assert est.lower_bound >= korn_quotient(warm, params) - 1e-12
        assert est.maximizer is not None
        assert "maximizer" not in est.model_dump()

    @pytest.mark.slow
    def test_korn_stable_under_refinement(self, unit_square):
        params = ExponentParams(p=2, a=0, b=2)
        grids = [Grid.build(unit_square, h) for h in (1 / 16, 1 / 32)]
        problems = [QuotientProblem("korn", params, grid) for grid in grids]
        values = [estimate_constant(problem).lower_bound for problem in problems]
        assert values[0] > 0
        assert values[1] == pytest.approx(values[0], rel=0.15)

    @pytest.mark.slow
    def test_room_field_is_a_warm_start(self, korn_fails_params):
        domain, placement = rooms_and_corridors(RoomsSpec(sigma=2, tau=1, rooms=1))
        # the corridor is 1/16 wide
        grid = Grid.build(domain, 1 / 128)
        u, _ = example_field(placement, 1, grid)
        problem = QuotientProblem("korn", korn_fails_params, grid, warm_starts=[u])
        est = estimate_constant(problem, budget=3)
        assert est.lower_bound >= korn_quotient(u, korn_fails_params) - 1e-12

    def test_ascent_is_deterministic(self, unit_square):
        grid = Grid.build(unit_square, 1 / 16)
        problem = QuotientProblem("poincare", ExponentParams(p=3, q=3), grid)
        first = estimate_constant(problem, budget=30, seed=7, threads=2)
        second = estimate_constant(problem, budget=30, seed=7, threads=2)
        assert first.method == "ascent"
        assert len(first.restarts) == 8
        assert first.lower_bound > 0
        assert first.lower_bound == second.lower_bound
        assert first.restarts == second.restarts


class TestBlowup:
    """Tests for quotients along the rooms."""

    def test_korn_fails(self, korn_fails_params):
        report = blowup_experiment(RoomsSpec(sigma=2, tau=1, rooms=4), korn_fails_params)
        assert report.predicted is Verdict.FAILS
        assert report.growth >= 10
        assert report.verdict is Verdict.FAILS
        assert [row[0] for row in report.rows] == [1, 2, 3, 4]
        assert report.rows[0][3] == pytest.approx((2 - 4) / 2)

    def test_john_rooms_hold(self, john_params):
        report = blowup_experiment(RoomsSpec(sigma=1, tau=1, rooms=3), john_params)
        assert report.predicted is Verdict.HOLDS
        assert report.growth <= 2
        assert report.verdict is Verdict.CONSISTENT_HOLDS

    def test_needs_korn_kind(self, korn_fails_params):
        with pytest.raises(ConstantsError, match="Korn kind"):
            blowup_experiment(RoomsSpec(), korn_fails_params, kind="poincare")

    def test_needs_two_rooms(self, korn_fails_params):
        with pytest.raises(ConstantsError, match="two rooms"):
            blowup_experiment(RoomsSpec(), korn_fails_params, rooms=[1])


class TestPipeline:
    """Tests for the rotation-field transfer."""

    def test_ramp(self, grid32):
        box = (0.0625, 0.0625, 0.1875, 0.1875)
        u = ramp(grid32, box, CUBE)
        assert u.values[grid32.in_box(CUBE)].max() == 0.0
        assert u.values[grid32.in_box(box)].min() == 1.0

    def test_ramp_too_close(self, grid32):
        with pytest.raises(ConstantsError, match="8 cells"):
            ramp(grid32, (0.65, 0.65, 0.7, 0.7), CUBE)

    def test_admissible_rectangles(self, unit_square):
        boxes = admissible_rectangles(unit_square, (0.625, 0.625, 0.875, 0.875), 1 / 32)
        assert boxes == [(0.125, 0.125, 0.375, 0.375)]

    def test_square_pipeline(self, unit_square):
        report = korn_poincare_pipeline(
            unit_square,
            ExponentParams(),
            (0.625, 0.625, 0.875, 0.875),
            1 / 32,
            rects=[(0.0625, 0.0625, 0.1875, 0.1875)],
        )
        assert report.pointwise_ok
        assert report.korn_constant > 0
        assert report.constant == pytest.approx(report.korn_constant**2 * 2 * 2)
        assert len(report.rectangles) == 1
        assert report.rectangles[0].holds
        assert report.verdict is Verdict.HOLDS
