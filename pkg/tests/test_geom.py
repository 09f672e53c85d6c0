"""Tests for rectilinear domains and Whitney decompositions."""

import math
from fractions import Fraction

import numpy as np
import pytest

from kornlab.errors import GeometryError, NotInDomainError, WhitneyError
from kornlab.gallery import square
from kornlab.geom import (
    RectDomain,
    boundary_distance,
    boundary_segments,
    box_boundary_gap,
    contains,
    fraction_to_str,
    inscribed_side,
    is_connected,
    make_rect,
    max_level_gap,
    neighbors,
    overlap_multiplicity,
    whitney_decompose,
)

from .conftest import L_SHAPE_SPEC


class TestRectDomain:
    """Tests for domain construction and the domain file format."""

    def test_from_spec_decimal_strings(self):
        domain = RectDomain.from_spec(L_SHAPE_SPEC)
        assert domain.rects[0].y1 == Fraction(1, 4)
        assert domain.bbox == (0.0, 0.0, 1.0, 1.0)

    def test_spec_round_trip(self, thin_l):
        assert RectDomain.from_spec(thin_l.to_spec()) == thin_l

    def test_fraction_to_str(self):
        assert fraction_to_str(Fraction(1, 4)) == "0.25"
        assert fraction_to_str(Fraction(-1, 8)) == "-0.125"
        assert fraction_to_str(Fraction(5)) == "5"
        assert fraction_to_str(Fraction(1, 3)) == "1/3"

    def test_empty_domain_rejected(self):
        with pytest.raises(GeometryError):
            RectDomain(name="empty", rects=())

    def test_degenerate_rect_rejected(self):
        with pytest.raises(GeometryError, match="degenerate"):
            RectDomain(name="flat", rects=(make_rect(0, 0, 1, 0),))

    def test_disconnected_rejected(self):
        with pytest.raises(GeometryError, match="not connected"):
            RectDomain(name="two", rects=(make_rect(0, 0, 1, 1), make_rect(2, 0, 3, 1)))

    def test_corner_contact_does_not_connect(self):
        with pytest.raises(GeometryError):
            RectDomain(name="corner", rects=(make_rect(0, 0, 1, 1), make_rect(1, 1, 2, 2)))

    def test_invalid_spec(self):
        with pytest.raises(GeometryError, match="Invalid domain spec"):
            RectDomain.from_spec({"name": "x", "rects": [["a", "0", "1", "1"]]})

    def test_diameter(self, unit_square):
        assert unit_square.diameter == pytest.approx(math.sqrt(2))


class TestBoundaryDistance:
    """Tests for membership and distance to the merged boundary."""

    def test_contains_closed(self, unit_square):
        assert contains(unit_square, (1.0, 0.5))
        assert not contains(unit_square, (1.01, 0.5))

    def test_square_center(self, unit_square):
        assert boundary_distance(unit_square, (0.5, 0.5)) == pytest.approx(0.5)
        assert boundary_distance(unit_square, (0.25, 0.5)) == pytest.approx(0.25)

    def test_shared_edges_are_interior(self, thin_l):
        # the two rectangles overlap on [0, 1/4]²; their edges there are not boundary
        assert len(thin_l.segments) == 6
        assert boundary_distance(thin_l, (0.125, 0.125)) == pytest.approx(0.125)

    def test_reentrant_corner(self, thin_l):
        d = boundary_distance(thin_l, (0.2, 0.2))
        assert d == pytest.approx(math.hypot(0.05, 0.05))

    def test_point_outside(self, thin_l):
        with pytest.raises(NotInDomainError):
            boundary_distance(thin_l, (0.5, 0.5))

    def test_box_gap(self, unit_square):
        assert box_boundary_gap(unit_square, (0.25, 0.25, 0.75, 0.75)) == pytest.approx(0.25)
        assert box_boundary_gap(unit_square, (0.0, 0.25, 0.5, 0.75)) == 0.0

    def test_boundary_segments_merge(self, thin_l):
        segs = boundary_segments(thin_l)
        assert len(segs) == 6
        lengths = np.abs(segs[:, 2] - segs[:, 0]) + np.abs(segs[:, 3] - segs[:, 1])
        assert lengths.sum() == pytest.approx(4.0)

    def test_shared_edge_is_interior(self, thin_l):
        segs = boundary_segments(thin_l)
        on_seam = (segs[:, 0] == 0.25) & (segs[:, 2] == 0.25) & (segs[:, 1] < 0.25)
        assert not on_seam.any()

    def test_inscribed_side(self, thin_l, unit_square):
        assert inscribed_side(thin_l) == 0.25
        assert inscribed_side(unit_square) == 1.0


class TestWhitney:
    """Tests for the Whitney decomposition invariants."""

    def test_square_level_three(self, square_decomp):
        assert len(square_decomp) == 16
        assert set(square_decomp.levels.tolist()) == {3}
        assert square_decomp.truncated

    @pytest.mark.parametrize("fixture", ["unit_square", "thin_l"])
    def test_whitney_bounds(self, fixture, request):
        domain = request.getfixturevalue(fixture)
        decomp = whitney_decompose(domain, 6)
        diam = decomp.sides * math.sqrt(2)
        assert (diam <= decomp.dist + 1e-12).all()
        assert (decomp.dist <= 4 * diam + 1e-12).all()
        for cube, d in zip(decomp.cubes, decomp.dist):
            assert box_boundary_gap(domain, cube.box) == pytest.approx(d)

    def test_disjoint_interiors(self, thin_l):
        decomp = whitney_decompose(thin_l, 5)
        boxes = decomp.boxes
        area = float(np.sum((boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])))
        assert area <= 1 - 0.75**2 + 1e-12
        for i in range(len(boxes)):
            b = boxes[i]
            dx = np.minimum(boxes[:, 2], b[2]) - np.maximum(boxes[:, 0], b[0])
            dy = np.minimum(boxes[:, 3], b[3]) - np.maximum(boxes[:, 1], b[1])
            overlap = (dx > 0) & (dy > 0)
            assert overlap.sum() == 1  # only itself

    def test_coverage_grows_with_level(self, unit_square):
        def area(level):
            boxes = whitney_decompose(unit_square, level).boxes
            return float(np.sum((boxes[:, 2] - boxes[:, 0]) ** 2))

        assert area(4) < area(6) < 1.0
        assert area(6) > 0.5

    def test_neighbors_and_gaps(self, unit_square):
        decomp = whitney_decompose(unit_square, 5)
        assert is_connected(decomp)
        assert max_level_gap(decomp) <= 2
        for j in neighbors(decomp, decomp.base):
            assert decomp.base in neighbors(decomp, j)

    def test_relative_rooms_stay_connected(self, rooms3):
        domain, placement = rooms3
        decomp = whitney_decompose(domain, 3, relative=True)
        assert is_connected(decomp)
        # corridor 3 is 2^-12 wide
        assert int(decomp.levels.max()) == 15
        for room in placement.rooms:
            decomp.locate(room.center)

    def test_overlap_multiplicity_bounded(self, unit_square):
        decomp = whitney_decompose(unit_square, 5)
        assert 1 <= overlap_multiplicity(decomp) <= 12

    def test_locate(self, square_decomp):
        j = square_decomp.locate((0.3, 0.6))
        x0, y0, x1, y1 = square_decomp.cubes[j].box
        assert x0 <= 0.3 <= x1 and y0 <= 0.6 <= y1
        with pytest.raises(WhitneyError):
            square_decomp.locate((0.01, 0.5))

    def test_base_point(self, unit_square):
        decomp = whitney_decompose(unit_square, 4, x0=(0.3, 0.3))
        x0, y0, x1, y1 = decomp.cubes[decomp.base].box
        assert x0 <= 0.3 <= x1 and y0 <= 0.3 <= y1

    def test_too_coarse(self):
        with pytest.raises(WhitneyError, match="too coarse"):
            whitney_decompose(square(), 0)

    def test_negative_level(self, unit_square):
        with pytest.raises(WhitneyError):
            whitney_decompose(unit_square, -1)

    def test_unknown_cube(self, square_decomp):
        with pytest.raises(WhitneyError):
            neighbors(square_decomp, 99)
