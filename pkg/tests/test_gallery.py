"""Tests for the domain generators."""

from fractions import Fraction

import pytest

from kornlab.errors import GalleryError
from kornlab.gallery import l_shape, rooms_and_corridors, square, strip
from kornlab.geom import RectDomain, boundary_distance
from kornlab.models import RoomsSpec


class TestRoomsAndCorridors:
    """Tests for the rooms-and-corridors family."""

    def test_no_rooms_is_unit_square(self):
        domain, placement = rooms_and_corridors(RoomsSpec(rooms=0))
        assert domain.rects == square().rects
        assert placement.rooms == []

    def test_default_layout(self, rooms3):
        domain, placement = rooms3
        assert len(domain.rects) == 7
        assert [r.r for r in placement.rooms] == [0.25, 0.0625, 0.015625]
        assert placement.rescale == 1.0
        assert placement.gap == 0.0625

    def test_corridor_and_room_geometry(self, rooms3):
        _, placement = rooms3
        room = placement.room(1)
        x0, y0, x1, y1 = room.corridor
        assert x1 - x0 == pytest.approx(room.r**2)  # width r^σ
        assert y0 == pytest.approx(-room.r)  # length r^τ
        assert y1 == 0.0
        assert room.room == [0.0625, -0.5, 0.3125, -0.25]
        assert room.center == [room.x, -0.375]

    def test_exact_corners(self, rooms3):
        domain, _ = rooms3
        assert domain.rects[1].x0 == Fraction(5, 32)
        assert domain.to_spec()["rects"][1][0] == "0.15625"

    def test_spec_round_trip(self, rooms3):
        domain, _ = rooms3
        assert RectDomain.from_spec(domain.to_spec()) == domain

    def test_corridor_is_narrow(self, rooms3):
        domain, placement = rooms3
        room = placement.room(2)
        mid = ((room.corridor[0] + room.corridor[2]) / 2, (room.corridor[1] + room.corridor[3]) / 2)
        assert boundary_distance(domain, mid) == pytest.approx(room.r**2 / 2)

    def test_unknown_room(self, rooms3):
        _, placement = rooms3
        with pytest.raises(KeyError):
            placement.room(4)

    def test_rooms_that_do_not_fit(self):
        with pytest.raises(GalleryError):
            rooms_and_corridors(RoomsSpec(rooms=2, room_sides=[0.6, 0.5]))

    def test_explicit_sides(self):
        _, placement = rooms_and_corridors(
            RoomsSpec(sigma=2, tau=1, rooms=2, room_sides=[0.2, 0.1])
        )
        assert [r.r for r in placement.rooms] == pytest.approx([0.2, 0.1])


class TestControlDomains:
    """Tests for the simple control domains."""

    def test_square(self):
        assert square(2).bbox == (0.0, 0.0, 2.0, 2.0)

    def test_strip(self):
        domain = strip(8, 1)
        assert boundary_distance(domain, (4, 0.5)) == pytest.approx(0.5)

    def test_l_shape(self):
        domain = l_shape(1, 0.25)
        assert len(domain.rects) == 2

    @pytest.mark.parametrize(
        "make",
        [lambda: square(0), lambda: strip(-1, 1), lambda: l_shape(1, 2)],
    )
    def test_invalid_dimensions(self, make):
        with pytest.raises(GalleryError):
            make()
