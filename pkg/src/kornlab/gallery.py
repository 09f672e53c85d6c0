"""Domain generators: rooms-and-corridors and simple control domains."""

from __future__ import annotations

import logging
from fractions import Fraction

from kornlab.errors import GalleryError
from kornlab.geom import Rect, RectDomain, make_rect
from kornlab.models import PlacementTable, RoomPlacement, RoomsSpec

logger = logging.getLogger(__name__)


def _power(r: Fraction, e: float) -> Fraction:
    if float(e).is_integer():
        return r ** int(e)
    return Fraction(float(r) ** e)


def _side(r: float, ratio: float, i: int, explicit: bool) -> Fraction:
    # geometric sides with an integral ratio stay exact
    if not explicit and float(ratio).is_integer():
        return Fraction(1, int(ratio) ** i)
    return Fraction(r)


def rooms_and_corridors(spec: RoomsSpec) -> tuple[RectDomain, PlacementTable]:
    """Unit square Q_0 with rooms Q_i hanging below it through corridors C_i.

    Corridor i is [x_i - r^σ/2, x_i + r^σ/2] x [-r^τ, 0] and room i is
    [x_i - r/2, x_i + r/2] x [-r^τ - r, -r^τ]. Rooms are placed left to right
    with gap r_1/4 and compressed uniformly when the last one passes x = 1.
    """
    sides = [
        _side(r, spec.ratio, i + 1, spec.room_sides is not None)
        for i, r in enumerate(spec.sides())
    ]
    rects: list[Rect] = [make_rect(0, 0, 1, 1)]
    table = PlacementTable(sigma=spec.sigma, tau=spec.tau, gap=0.0)
    if not sides:
        return RectDomain(name="rooms-0", rects=tuple(rects)), table

    gap = sides[0] / 4
    xs = [sides[0] / 2 + gap]
    for prev, cur in zip(sides, sides[1:]):
        xs.append(xs[-1] + prev / 2 + cur / 2 + gap)

    rescale = Fraction(1)
    right = xs[-1] + sides[-1] / 2
    if right + gap > 1:
        rescale = (1 - gap) / right
        xs = [x * rescale for x in xs]
        logger.info("Rescaled room abscissas by %.6g to fit the unit square", float(rescale))
    _check_feasible(xs, sides, spec)

    rooms: list[RoomPlacement] = []
    for i, (x, r) in enumerate(zip(xs, sides), start=1):
        w = _power(r, spec.sigma)
        t = _power(r, spec.tau)
        corridor = make_rect(x - w / 2, -t, x + w / 2, 0)
        room = make_rect(x - r / 2, -t - r, x + r / 2, -t)
        rects.extend([corridor, room])
        rooms.append(
            RoomPlacement(
                index=i,
                x=float(x),
                r=float(r),
                corridor=[float(c) for c in corridor],
                room=[float(c) for c in room],
                center=[float(x), float(-r / 2 - t)],
            )
        )
    table = PlacementTable(
        sigma=spec.sigma, tau=spec.tau, gap=float(gap), rescale=float(rescale), rooms=rooms
    )
    domain = RectDomain(name=f"rooms-{len(sides)}", rects=tuple(rects))
    logger.debug("Built %s with %d rectangles", domain.name, len(rects))
    return domain, table


def _check_feasible(xs: list[Fraction], sides: list[Fraction], spec: RoomsSpec) -> None:
    if xs[0] - sides[0] / 2 <= 0 or xs[-1] + sides[-1] / 2 >= 1:
        raise GalleryError(
            f"Rooms do not fit below the unit square; sides must decay faster "
            f"(ratio {spec.ratio} with {len(sides)} rooms)"
        )
    for i in range(len(xs) - 1):
        if xs[i] + sides[i] / 2 >= xs[i + 1] - sides[i + 1] / 2:
            raise GalleryError(
                f"Rooms {i + 1} and {i + 2} overlap after rescaling; "
                f"need sum of sides plus gaps below 1 (ratio {spec.ratio} too small)"
            )


def square(side: float = 1) -> RectDomain:
    if side <= 0:
        raise GalleryError(f"square side must be positive, got {side}")
    return RectDomain(name="square", rects=(make_rect(0, 0, side, side),))


def strip(length: float, width: float) -> RectDomain:
    if length <= 0 or width <= 0:
        raise GalleryError(f"strip dimensions must be positive, got {length} x {width}")
    return RectDomain(name="strip", rects=(make_rect(0, 0, length, width),))


def l_shape(arm: float, thickness: float) -> RectDomain:
    """Union of [0, arm] x [0, thickness] and [0, thickness] x [0, arm]."""
    if arm <= 0 or thickness <= 0 or thickness > arm:
        raise GalleryError(f"l_shape needs 0 < thickness <= arm, got {arm}, {thickness}")
    return RectDomain(
        name="l_shape",
        rects=(make_rect(0, 0, arm, thickness), make_rect(0, 0, thickness, arm)),
    )
