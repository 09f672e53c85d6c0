"""Tests for quasihyperbolic distances, chains and classifiers."""

import math

import pytest

from kornlab.errors import NotInDomainError, QuasihyperbolicError
from kornlab.gallery import rooms_and_corridors, strip
from kornlab.geom import Point, boundary_distance, whitney_decompose
from kornlab.models import RoomsSpec, Verdict
from kornlab.qhyp import (
    build_graph,
    check_qhbc,
    check_sjohn,
    geodesic_chains,
    qh_distance,
    required_level,
    shadow_diameter_fit,
)


def _touch(a, b):
    return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]


class TestDistance:
    """Tests for qh_distance."""

    def test_vertical_segment(self, unit_square):
        d = qh_distance(unit_square, (0.5, 0.45), (0.5, 0.15), 6)
        assert d.lower == pytest.approx(math.log(3))
        assert d.upper >= d.lower - 1e-9
        assert d.upper == pytest.approx(math.log(3), rel=0.03)

    def test_center_to_bottom(self, unit_square):
        d = qh_distance(unit_square, (0.5, 0.5), (0.5, 0.1), 7)
        assert d.lower == pytest.approx(math.log(5))
        assert d.upper == pytest.approx(math.log(5), rel=0.03)

    def test_strip_midline(self):
        # ρ = 1 along the whole segment
        d = qh_distance(strip(10, 2), (3, 1), (7, 1), 4)
        assert d.lower == pytest.approx(0.0, abs=1e-12)
        assert d.upper == pytest.approx(4.0, rel=0.03)

    def test_symmetric(self, unit_square):
        graph = build_graph(whitney_decompose(unit_square, 6))
        x, y = (0.3, 0.6), (0.7, 0.2)
        forward = qh_distance(unit_square, x, y, 6, graph=graph)
        backward = qh_distance(unit_square, y, x, 6, graph=graph)
        assert forward.upper == pytest.approx(backward.upper, rel=1e-9)
        assert forward.lower == pytest.approx(backward.lower)

    def test_triangle_inequality(self, unit_square):
        decomp = whitney_decompose(unit_square, 6)
        graph = build_graph(decomp)
        x, z = (0.3, 0.6), (0.7, 0.2)
        d_xz = qh_distance(unit_square, x, z, 6, graph=graph).upper
        inner = [c for c in decomp.centers if boundary_distance(unit_square, c) >= 0.15]
        for y in (inner[0], inner[len(inner) // 2], inner[-1]):
            y = tuple(float(v) for v in y)
            d_xy = qh_distance(unit_square, x, y, 6, graph=graph).upper
            d_yz = qh_distance(unit_square, y, z, 6, graph=graph).upper
            assert d_xz <= d_xy + d_yz + 1e-9

    def test_same_point(self, unit_square):
        assert qh_distance(unit_square, (0.4, 0.4), (0.4, 0.4), 3) == (0.0, 0.0)

    def test_too_close_to_boundary(self, unit_square):
        with pytest.raises(QuasihyperbolicError) as exc:
            qh_distance(unit_square, (0.5, 0.01), (0.5, 0.5), 4)
        assert exc.value.required_level == 10

    def test_required_level(self):
        assert required_level(0.01) == 10
        assert required_level(8.0) == 0

    def test_outside_point(self, unit_square):
        with pytest.raises(NotInDomainError):
            qh_distance(unit_square, (1.5, 0.5), (0.5, 0.5), 4)

    def test_reentrant_corner_costs_more(self, thin_l):
        # both points sit at ρ = 1/8 in different arms
        d = qh_distance(thin_l, (0.875, 0.125), (0.125, 0.875), 7)
        assert d.lower == pytest.approx(0.0, abs=1e-12)
        assert d.upper > 2.0


class TestChains:
    """Tests for geodesic_chains."""

    def test_chains_start_at_base(self, square_decomp):
        table = geodesic_chains(build_graph(square_decomp))
        assert table.base == square_decomp.base
        for j, chain in enumerate(table.chains):
            assert chain[0] == table.base
            assert chain[-1] == j

    def test_consecutive_cubes_touch(self, square_decomp):
        table = geodesic_chains(build_graph(square_decomp))
        boxes = square_decomp.boxes
        for chain in table.chains:
            for a, b in zip(chain, chain[1:]):
                assert _touch(boxes[a], boxes[b])

    def test_base_shadow_holds_everything(self, square_decomp):
        table = geodesic_chains(build_graph(square_decomp))
        assert sorted(table.shadows[table.base].tolist()) == list(range(len(square_decomp)))
        for j in range(len(square_decomp)):
            assert j in table.shadows[j]

    @pytest.mark.parametrize(("fixture", "level"), [("unit_square", 4), ("thin_l", 5)])
    def test_shadows_nest(self, fixture, level, request):
        decomp = whitney_decompose(request.getfixturevalue(fixture), level)
        table = geodesic_chains(build_graph(decomp))
        shadows = [set(s.tolist()) for s in table.shadows]
        for q, chain in enumerate(table.chains):
            for c in chain:
                assert shadows[q] <= shadows[c]

    def test_chain_prefixes_are_chains(self, thin_l):
        table = geodesic_chains(build_graph(whitney_decompose(thin_l, 5)))
        for chain in table.chains:
            if len(chain) > 1:
                assert table.chains[chain[-2]] == chain[:-1]

    def test_room_chain_crosses_corridor(self):
        domain, placement = rooms_and_corridors(RoomsSpec(sigma=2, tau=2, rooms=4))
        decomp = whitney_decompose(domain, 3, relative=True)
        table = geodesic_chains(build_graph(decomp))
        b = decomp.boxes
        for room in placement.rooms:
            x0, y0, x1, y1 = room.corridor
            inside = (b[:, 0] >= x0) & (b[:, 2] <= x1) & (b[:, 1] >= y0) & (b[:, 3] <= y1)
            chain = table.chains[decomp.locate(room.center)]
            assert inside[chain].any()

    def test_shadow_fit(self, square_decomp):
        table = geodesic_chains(build_graph(square_decomp))
        report = shadow_diameter_fit(square_decomp, table, 1.0)
        assert len(report.samples) == len(square_decomp)
        assert any("2β/(1+β)" in note for note in report.notes)

    def test_shadow_fit_rejects_beta(self, square_decomp):
        table = geodesic_chains(build_graph(square_decomp))
        with pytest.raises(QuasihyperbolicError, match="beta"):
            shadow_diameter_fit(square_decomp, table, 0.0)


class TestClassifiers:
    """Tests for the QHBC and s-John estimators."""

    def test_square_is_qhbc(self, unit_square):
        beta, c0, report = check_qhbc(unit_square, None, 32, 5)
        assert 0.05 < beta <= 1.0
        assert math.isfinite(c0)
        assert report.verdict is Verdict.HOLDS
        assert report.witness is not None

    def test_square_is_john(self, unit_square):
        s, c, report = check_sjohn(unit_square, None, 32, 5)
        assert 1.0 <= s < 6.0
        assert c > 0
        assert report.verdict is Verdict.HOLDS

    def test_base_point(self, unit_square):
        beta, _, _ = check_qhbc(unit_square, Point(0.5, 0.5), 16, 4)
        assert beta > 0

    @pytest.mark.parametrize("check", [check_qhbc, check_sjohn])
    def test_needs_samples(self, unit_square, check):
        with pytest.raises(QuasihyperbolicError, match="16 samples"):
            check(unit_square, None, 8, 4)


@pytest.mark.slow
class TestRoomsClassifiers:
    """Exponents recovered on rooms-and-corridors domains."""

    @pytest.fixture(scope="class")
    def john_rooms(self):
        domain, _ = rooms_and_corridors(RoomsSpec(sigma=2, tau=1, rooms=5))
        return domain

    def test_sjohn_exponent_is_sigma(self, john_rooms):
        s, c, report = check_sjohn(john_rooms, None, 32, 3)
        assert s == pytest.approx(2.0, rel=0.15)
        assert c > 0
        assert report.verdict is Verdict.HOLDS

    def test_smaller_john_exponent_fails(self, john_rooms):
        _, _, report = check_sjohn(john_rooms, None, 32, 3, forced_s=1.5)
        assert report.verdict is Verdict.FAILS

    def test_qhbc_exponent(self):
        domain, _ = rooms_and_corridors(RoomsSpec(sigma=2, tau=2, rooms=5))
        beta, _, report = check_qhbc(domain, None, 32, 3)
        assert beta == pytest.approx(1 / 3, rel=0.15)
        assert report.verdict is Verdict.HOLDS

    def test_qhbc_exponent_vanishes_with_more_rooms(self):
        betas = []
        for rooms in (1, 2):
            domain, _ = rooms_and_corridors(RoomsSpec(sigma=3, tau=1, rooms=rooms))
            betas.append(check_qhbc(domain, None, 32, 3)[0])
        assert betas[1] < 0.5 * betas[0]
        assert betas[1] < 0.01
