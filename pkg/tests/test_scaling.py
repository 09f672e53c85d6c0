"""Tests for exponent predictions, threshold predicates and slope measurement."""

import math

import numpy as np
import pytest

from kornlab.errors import ScalingError
from kornlab.gallery import rooms_and_corridors
from kornlab.models import ExponentParams, RoomsSpec, Verdict
from kornlab.scaling import (
    QUANTITIES,
    HPolicy,
    corridor_eps_oracle,
    exponent_condition_qhbc,
    fit_line,
    fit_loglog,
    korn_verdict_qhbc,
    korn_verdict_sjohn,
    measure_scaling,
    poincare_verdict_qhbc,
    poincare_verdict_sjohn,
    predicted_exponents,
    predicts_korn_failure,
    reduced_verdict_qhbc,
    reduced_verdict_sjohn,
    room_integrals,
)

from .conftest import KORN_FAILS

# (p, a, b, σ, τ) sets whose slopes are fitted over rooms 1..4
SCALING_SETS = {
    "korn-fails": KORN_FAILS,
    "weighted-room": {"p": 2, "a": 1, "b": 2, "sigma": 2, "tau": 1},
    "cubic": {"p": 3, "a": 0, "b": 3, "sigma": 2, "tau": 2},
}


@pytest.fixture(params=list(SCALING_SETS), scope="module")
def scaling_set(request):
    params = ExponentParams(**SCALING_SETS[request.param])
    spec = RoomsSpec(sigma=params.sigma, tau=params.tau, rooms=4)
    domain, placement = rooms_and_corridors(spec)
    return params, domain, placement


class TestFits:
    """Tests for the least-squares helpers."""

    def test_exact_line(self):
        report = fit_line(np.array([0.0, 1.0, 2.0]), np.array([1.0, 3.0, 5.0]))
        assert report.slope == pytest.approx(2.0)
        assert report.intercept == pytest.approx(1.0)
        assert report.r_squared == pytest.approx(1.0)

    def test_power_law(self):
        r = np.array([0.25, 0.0625, 0.015625])
        report = fit_loglog(r, 3 * r**5)
        assert report.slope == pytest.approx(5.0)
        assert report.samples[0] == (0.25, 3 * 0.25**5)

    def test_non_positive_samples(self):
        with pytest.raises(ScalingError):
            fit_loglog(np.array([1.0, 0.5]), np.array([1.0, 0.0]))

    def test_single_sample(self):
        assert fit_line(np.array([1.0]), np.array([2.0])).slope == 0.0


class TestPredictions:
    """Tests for closed-form exponents and verdicts."""

    def test_room_exponents(self, korn_fails_params):
        assert predicted_exponents(korn_fails_params) == {
            "room_Du": 2,
            "corridor_eps": 5,
            "room_u": 4,
        }

    def test_exponents_of_other_sets(self):
        weighted = ExponentParams(p=2, a=1, b=2, sigma=2, tau=1)
        assert predicted_exponents(weighted) == {"room_Du": 3, "corridor_eps": 5, "room_u": 5}
        # σ(b + 1) + τ(1 - p) = 8 - 4
        cubic = ExponentParams(p=3, a=0, b=3, sigma=2, tau=2)
        assert predicted_exponents(cubic) == {"room_Du": 2, "corridor_eps": 4, "room_u": 5}

    def test_korn_sjohn_fails_beyond_threshold(self):
        assert korn_verdict_sjohn(ExponentParams(b=2, s=2)) is Verdict.FAILS

    def test_korn_sjohn_equality_on_john_domains(self):
        # n + a = s(n + b - 1) - p + 1 with s = 1
        assert korn_verdict_sjohn(ExponentParams(b=2, s=1)) is Verdict.HOLDS

    def test_korn_sjohn_equality_is_borderline(self):
        # 2 + a = 2(2 + 1 - 1) - 2 + 1 = 3 for a = 1
        assert korn_verdict_sjohn(ExponentParams(a=1, b=1, s=2)) is Verdict.BORDERLINE

    def test_korn_sjohn_holds(self):
        assert korn_verdict_sjohn(ExponentParams()) is Verdict.HOLDS

    def test_korn_needs_p_above_one(self):
        with pytest.raises(ScalingError):
            korn_verdict_sjohn(ExponentParams(p=1))

    def test_korn_qhbc(self):
        assert korn_verdict_qhbc(ExponentParams()) is Verdict.HOLDS
        # (a + 2)·2β/(1 + β) = 4/3 against 2 + b - p = 2
        assert korn_verdict_qhbc(ExponentParams(beta=0.5, b=2)) is Verdict.FAILS

    def test_poincare_side_conditions(self):
        with pytest.raises(ScalingError, match="p <= q"):
            poincare_verdict_qhbc(ExponentParams(p=2, q=1))
        with pytest.raises(ScalingError, match="np/"):
            poincare_verdict_qhbc(ExponentParams(p=1.5, q=7))

    def test_poincare_qhbc(self):
        assert poincare_verdict_qhbc(ExponentParams()) is Verdict.HOLDS
        assert poincare_verdict_qhbc(ExponentParams(b=6)) is Verdict.FAILS

    def test_poincare_sjohn_is_one_sided(self):
        assert poincare_verdict_sjohn(ExponentParams()) is Verdict.HOLDS
        assert poincare_verdict_sjohn(ExponentParams(b=2, s=2)) is Verdict.NOT_GUARANTEED

    def test_reduced_verdicts(self, korn_fails_params, john_params):
        assert reduced_verdict_sjohn(korn_fails_params) is Verdict.FAILS
        assert reduced_verdict_sjohn(john_params) is Verdict.BORDERLINE
        assert reduced_verdict_qhbc(ExponentParams(sigma=2, tau=2, b=2)) is Verdict.FAILS

    def test_predicts_failure(self, korn_fails_params, john_params):
        assert predicts_korn_failure(korn_fails_params)
        assert not predicts_korn_failure(john_params)

    def test_exponent_condition(self):
        ok, value = exponent_condition_qhbc(ExponentParams())
        # (0/2 + 1)·1/2 + 1/2 - 1/2 - 0 = 1/2
        assert ok
        assert value == pytest.approx(0.5)


class TestRoomMeasurements:
    """Tests for per-room integrals and fitted slopes."""

    def test_corridor_matches_beta_identity(self, rooms3, korn_fails_params):
        domain, placement = rooms3
        vals = room_integrals(domain, placement, 1, korn_fails_params)
        oracle = corridor_eps_oracle(0.25, korn_fails_params)
        assert oracle == pytest.approx(0.0625**3 / (3 * 0.25))
        assert vals["corridor_eps"] == pytest.approx(oracle, rel=0.02)

    def test_room_strain_vanishes(self, rooms3, korn_fails_params):
        domain, placement = rooms3
        vals = room_integrals(domain, placement, 2, korn_fails_params)
        assert vals["room_eps"] < 1e-12
        assert vals["room_Du"] == pytest.approx(8 * 0.0625**2)

    @pytest.mark.parametrize("quantity", QUANTITIES)
    def test_slopes_over_four_rooms(self, scaling_set, quantity):
        params, domain, placement = scaling_set
        report = measure_scaling(domain, placement, params, quantity)
        assert report.predicted_slope == predicted_exponents(params)[quantity]
        assert report.fitted_slope == pytest.approx(report.predicted_slope, rel=0.02)
        assert report.verdict is Verdict.HOLDS
        assert [r for r, _ in report.samples] == pytest.approx([4.0**-i for i in range(1, 5)])

    def test_corridor_matches_oracle_in_every_set(self, scaling_set):
        params, domain, placement = scaling_set
        for i in (1, 4):
            vals = room_integrals(domain, placement, i, params)
            oracle = corridor_eps_oracle(placement.room(i).r, params)
            assert vals["corridor_eps"] == pytest.approx(oracle, rel=0.02)

    def test_unknown_quantity(self, rooms3, korn_fails_params):
        domain, placement = rooms3
        with pytest.raises(ScalingError, match="unknown quantity"):
            measure_scaling(domain, placement, korn_fails_params, "room_eps")

    def test_too_few_rooms(self, rooms3, korn_fails_params):
        domain, placement = rooms3
        with pytest.raises(ScalingError, match="at least 3"):
            measure_scaling(domain, placement, korn_fails_params, "room_Du", rooms=[1, 2])

    def test_under_resolved_corridor(self, rooms3, korn_fails_params):
        domain, placement = rooms3
        with pytest.raises(ScalingError, match="under-resolved"):
            room_integrals(domain, placement, 1, korn_fails_params, HPolicy(cells_across=4))

    def test_divergent_oracle(self):
        with pytest.raises(ScalingError):
            corridor_eps_oracle(0.25, ExponentParams(p=3, b=1))

    def test_oracle_is_finite(self, korn_fails_params):
        assert math.isfinite(corridor_eps_oracle(0.0625, korn_fails_params))
