"""Exact rectilinear domain geometry and dyadic Whitney decompositions."""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from kornlab.errors import GeometryError, NotInDomainError, WhitneyError

logger = logging.getLogger(__name__)

# Points per chunk when evaluating distances against all boundary segments.
_CHUNK = 4096
# Cubes within this many sides of a rectangle inherit its relative truncation level.
RELATIVE_REACH = 8.0


class Point(NamedTuple):
    """A point in the plane."""

    x: float
    y: float


class Rect(NamedTuple):
    """Closed axis-aligned rectangle with rational corners."""

    x0: Fraction
    y0: Fraction
    x1: Fraction
    y1: Fraction

    @property
    def width(self) -> Fraction:
        return self.x1 - self.x0

    @property
    def height(self) -> Fraction:
        return self.y1 - self.y0


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value)
    return Fraction(str(value))


def fraction_to_str(value: Fraction) -> str:
    """Render a rational as a decimal string when finite, else as p/q."""
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    if digits == 0:
        return str(value.numerator)
    scaled = value * 10**digits
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def make_rect(x0: Any, y0: Any, x1: Any, y1: Any) -> Rect:
    """Build a rectangle from numbers or decimal strings."""
    return Rect(_to_fraction(x0), _to_fraction(y0), _to_fraction(x1), _to_fraction(y1))


@dataclass(frozen=True)
class RectDomain:
    """Connected finite union of closed axis-aligned rectangles."""

    name: str
    rects: tuple[Rect, ...]

    def __post_init__(self) -> None:
        if not self.rects:
            raise GeometryError(f"Domain '{self.name}' has no rectangles")
        for rect in self.rects:
            if rect.width <= 0 or rect.height <= 0:
                raise GeometryError(
                    f"Domain '{self.name}' has a degenerate rectangle {tuple(map(str, rect))}"
                )
        if not _rects_connected(self.rects):
            raise GeometryError(f"Domain '{self.name}' is not connected")

    @classmethod
    def from_spec(cls, spec: dict[str, Any]) -> RectDomain:
        """Parse the domain file format: {"name": str, "rects": [[x0, y0, x1, y1], ...]}."""
        try:
            rects = tuple(make_rect(*r) for r in spec["rects"])
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
            raise GeometryError(f"Invalid domain spec: {e}") from e
        return cls(name=str(spec.get("name", "domain")), rects=rects)

    def to_spec(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "rects": [[fraction_to_str(c) for c in r] for r in self.rects],
        }

    @cached_property
    def array(self) -> np.ndarray:
        """Rectangles as a float array of shape (R, 4)."""
        return np.array([[float(c) for c in r] for r in self.rects], dtype=float)

    @cached_property
    def segments(self) -> np.ndarray:
        return boundary_segments(self)

    @cached_property
    def bbox(self) -> tuple[float, float, float, float]:
        a = self.array
        return (a[:, 0].min(), a[:, 1].min(), a[:, 2].max(), a[:, 3].max())

    @property
    def diameter(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)


def _rects_connected(rects: tuple[Rect, ...]) -> bool:
    """Connectivity of the rectangle-overlap graph; corner contact does not connect."""
    n = len(rects)
    if n == 1:
        return True
    rows, cols = [], []
    for i in range(n):
        for j in range(i + 1, n):
            a, b = rects[i], rects[j]
            dx = min(a.x1, b.x1) - max(a.x0, b.x0)
            dy = min(a.y1, b.y1) - max(a.y0, b.y0)
            if dx >= 0 and dy >= 0 and (dx > 0 or dy > 0):
                rows.append(i)
                cols.append(j)
    graph = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    count, _ = connected_components(graph, directed=False)
    return count == 1


def contains_many(domain: RectDomain, points: np.ndarray) -> np.ndarray:
    """Closed-union membership for an array of points of shape (M, 2)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = domain.array
    px = pts[:, 0:1]
    py = pts[:, 1:2]
    inside = (px >= r[:, 0]) & (px <= r[:, 2]) & (py >= r[:, 1]) & (py <= r[:, 3])
    return inside.any(axis=1)


def contains(domain: RectDomain, pt: Point | tuple[float, float]) -> bool:
    """True iff the point lies in the closed union of rectangles."""
    return bool(contains_many(domain, np.array([pt], dtype=float))[0])


def boundary_segments(domain: RectDomain) -> np.ndarray:
    """Boundary of the union as axis-parallel segments, shape (S, 4) as x0, y0, x1, y1.

    Edges shared by two rectangles of the union are interior and do not appear.
    """
    r = domain.array
    xs = np.unique(np.concatenate([r[:, 0], r[:, 2]]))
    ys = np.unique(np.concatenate([r[:, 1], r[:, 3]]))
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    gx, gy = np.meshgrid(cx, cy, indexing="ij")
    inside = contains_many(domain, np.column_stack([gx.ravel(), gy.ravel()]))
    inside = inside.reshape(len(cx), len(cy))
    padded = np.zeros((len(cx) + 2, len(cy) + 2), dtype=bool)
    padded[1:-1, 1:-1] = inside

    segs: list[tuple[float, float, float, float]] = []
    # vertical edges at xs[i], between cells i-1 and i
    vert = padded[:-1, 1:-1] != padded[1:, 1:-1]
    for i, j in zip(*np.nonzero(vert)):
        segs.append((xs[i], ys[j], xs[i], ys[j + 1]))
    horiz = padded[1:-1, :-1] != padded[1:-1, 1:]
    for i, j in zip(*np.nonzero(horiz)):
        segs.append((xs[i], ys[j], xs[i + 1], ys[j]))
    return _merge_segments(np.array(segs, dtype=float))


def _merge_segments(segs: np.ndarray) -> np.ndarray:
    """Join collinear contiguous segments."""
    merged: list[list[float]] = []
    vertical = segs[:, 0] == segs[:, 2]
    for group, key, lo, hi in ((segs[vertical], 0, 1, 3), (segs[~vertical], 1, 0, 2)):
        order = np.lexsort((group[:, lo], group[:, key]))
        for seg in group[order]:
            last = merged[-1] if merged else None
            if (
                last is not None
                and (last[0] == last[2]) == (key == 0)
                and last[key] == seg[key]
                and last[hi] == seg[lo]
            ):
                last[hi] = seg[hi]
            else:
                merged.append(list(seg))
    return np.array(merged, dtype=float)


def _box_gap(segs: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Euclidean distance between boxes (M, 4) and axis-parallel segments, min over segments."""
    out = np.empty(len(boxes))
    for start in range(0, len(boxes), _CHUNK):
        b = boxes[start : start + _CHUNK]
        gx = np.maximum(
            0.0,
            np.maximum(segs[:, 0][None, :] - b[:, 2:3], b[:, 0:1] - segs[:, 2][None, :]),
        )
        gy = np.maximum(
            0.0,
            np.maximum(segs[:, 1][None, :] - b[:, 3:4], b[:, 1:2] - segs[:, 3][None, :]),
        )
        out[start : start + _CHUNK] = np.sqrt(gx * gx + gy * gy).min(axis=1)
    return out


def boundary_distance_many(domain: RectDomain, points: np.ndarray) -> np.ndarray:
    """Distance ρ to the merged boundary for points of shape (M, 2), all in the domain."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    inside = contains_many(domain, pts)
    if not inside.all():
        bad = pts[np.argmin(inside)]
        raise NotInDomainError(f"Point ({bad[0]}, {bad[1]}) not in domain '{domain.name}'")
    return _box_gap(domain.segments, np.column_stack([pts, pts]))


def boundary_set_distance(domain: RectDomain, points: np.ndarray) -> np.ndarray:
    """Distance to the boundary set without a membership check."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return _box_gap(domain.segments, np.column_stack([pts, pts]))


def boundary_distance(domain: RectDomain, pt: Point | tuple[float, float]) -> float:
    """Exact distance from a point of the domain to its boundary."""
    return float(boundary_distance_many(domain, np.array([pt], dtype=float))[0])


def box_boundary_gap(domain: RectDomain, box: tuple[float, float, float, float]) -> float:
    """Distance between a closed box and the boundary; zero when they meet."""
    return float(_box_gap(domain.segments, np.array([box], dtype=float))[0])


def inscribed_side(domain: RectDomain) -> float:
    """Side of the largest square inscribed in one of the rectangles."""
    a = domain.array
    return float(np.minimum(a[:, 2] - a[:, 0], a[:, 3] - a[:, 1]).max())


# ---------------------------------------------------------------------------
# Whitney decomposition
# ---------------------------------------------------------------------------


class WhitneyCube(NamedTuple):
    """Dyadic cube [ix 2^-k, (ix+1) 2^-k] x [iy 2^-k, (iy+1) 2^-k]."""

    level: int
    ix: int
    iy: int

    @property
    def side(self) -> float:
        return 2.0**-self.level

    @property
    def diam(self) -> float:
        return self.side * math.sqrt(2.0)

    @property
    def box(self) -> tuple[float, float, float, float]:
        s = self.side
        return (self.ix * s, self.iy * s, (self.ix + 1) * s, (self.iy + 1) * s)

    @property
    def center(self) -> Point:
        s = self.side
        return Point((self.ix + 0.5) * s, (self.iy + 0.5) * s)


@dataclass(frozen=True, eq=False)
class WhitneyDecomposition:
    """Finite, truncated Whitney decomposition of a rectilinear domain."""

    domain: RectDomain
    cubes: tuple[WhitneyCube, ...]
    dist: np.ndarray
    adjacency: sparse.csr_matrix
    base: int
    min_level: int
    truncated: bool
    relative: bool = False
    index: dict[WhitneyCube, int] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.cubes)

    @cached_property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.cubes], dtype=float)

    @cached_property
    def sides(self) -> np.ndarray:
        return np.array([c.side for c in self.cubes], dtype=float)

    @cached_property
    def boxes(self) -> np.ndarray:
        return np.array([c.box for c in self.cubes], dtype=float)

    @property
    def levels(self) -> np.ndarray:
        return np.array([c.level for c in self.cubes], dtype=int)

    def covering(self, pt: Point | tuple[float, float]) -> np.ndarray:
        """Indices of all cubes whose closure contains the point."""
        b = self.boxes
        x, y = pt
        hit = np.nonzero((b[:, 0] <= x) & (x <= b[:, 2]) & (b[:, 1] <= y) & (y <= b[:, 3]))[0]
        if len(hit) == 0:
            raise WhitneyError(f"Point ({x}, {y}) is not covered by the decomposition")
        return hit

    def locate(self, pt: Point | tuple[float, float]) -> int:
        """Index of a cube whose closure contains the point."""
        hit = self.covering(pt)
        # prefer the largest cube on shared faces
        return int(hit[np.argmin(self.levels[hit])])


def _rect_cutoffs(domain: RectDomain, min_level: int, relative: bool) -> np.ndarray:
    a = domain.array
    if not relative:
        return np.full(len(a), min_level, dtype=int)
    short = np.minimum(a[:, 2] - a[:, 0], a[:, 3] - a[:, 1])
    extra = np.maximum(0, np.ceil(-np.log2(short))).astype(int)
    return min_level + extra


def whitney_decompose(
    domain: RectDomain,
    min_level: int,
    x0: Point | tuple[float, float] | None = None,
    relative: bool = False,
) -> WhitneyDecomposition:
    """Dyadic Whitney decomposition with diam(Q) <= dist(Q, boundary) <= 4 diam(Q).

    Cubes smaller than the truncation side 2^-min_level are omitted and flagged.
    With ``relative`` the truncation side is taken relative to the short side of
    the thinnest rectangle within RELATIVE_REACH sides of the cube, so the cones
    leading into and out of a thin corridor are resolved together with it.
    """
    if min_level < 0:
        raise WhitneyError("min_level must be non-negative")
    segs = domain.segments
    rects = domain.array
    cutoffs = _rect_cutoffs(domain, min_level, relative)
    bx0, by0, bx1, by1 = domain.bbox
    extent = max(bx1 - bx0, by1 - by0)
    top = math.floor(-math.log2(extent))
    s = 2.0**-top
    queue: deque[WhitneyCube] = deque(
        WhitneyCube(top, ix, iy)
        for ix in range(math.floor(bx0 / s), math.ceil(bx1 / s))
        for iy in range(math.floor(by0 / s), math.ceil(by1 / s))
    )

    accepted: list[WhitneyCube] = []
    gaps: list[float] = []
    truncated = False
    while queue:
        cube = queue.popleft()
        cx0, cy0, cx1, cy1 = cube.box
        overlap = (
            (np.minimum(rects[:, 2], cx1) - np.maximum(rects[:, 0], cx0) > 0)
            & (np.minimum(rects[:, 3], cy1) - np.maximum(rects[:, 1], cy0) > 0)
        )
        if not overlap.any():
            continue
        rx = np.maximum(0.0, np.maximum(rects[:, 0] - cx1, cx0 - rects[:, 2]))
        ry = np.maximum(0.0, np.maximum(rects[:, 1] - cy1, cy0 - rects[:, 3]))
        near = np.hypot(rx, ry) <= RELATIVE_REACH * cube.side
        gap = float(_box_gap(segs, np.array([cube.box]))[0])
        if gap > 0 and not contains(domain, cube.center):
            continue
        if gap > 0 and cube.diam <= gap <= 4.0 * cube.diam:
            accepted.append(cube)
            gaps.append(gap)
            continue
        if gap > 4.0 * cube.diam or cube.level + 1 <= int(cutoffs[near].max()):
            for dx in (0, 1):
                for dy in (0, 1):
                    queue.append(WhitneyCube(cube.level + 1, 2 * cube.ix + dx, 2 * cube.iy + dy))
        else:
            truncated = True

    if not accepted:
        raise WhitneyError(
            f"min_level {min_level} is too coarse to produce any Whitney cube in '{domain.name}'"
        )
    order = sorted(range(len(accepted)), key=lambda i: accepted[i])
    cubes = tuple(accepted[i] for i in order)
    dist = np.array([gaps[i] for i in order])
    index = {c: i for i, c in enumerate(cubes)}
    adjacency = _build_adjacency(cubes, index)

    if x0 is None:
        base = int(np.argmax(dist))
    else:
        base = -1
    decomp = WhitneyDecomposition(
        domain=domain,
        cubes=cubes,
        dist=dist,
        adjacency=adjacency,
        base=base,
        min_level=min_level,
        truncated=truncated,
        relative=relative,
        index=index,
    )
    if x0 is not None:
        object.__setattr__(decomp, "base", decomp.locate(x0))
    logger.debug(
        "Whitney decomposition of %s: %d cubes, levels %d..%d, truncated=%s",
        domain.name,
        len(cubes),
        cubes[0].level,
        max(c.level for c in cubes),
        truncated,
    )
    return decomp


def _closures_touch(a: WhitneyCube, b: WhitneyCube) -> bool:
    m = max(a.level, b.level)
    sa, sb = 1 << (m - a.level), 1 << (m - b.level)
    ax0, ay0 = a.ix * sa, a.iy * sa
    bx0, by0 = b.ix * sb, b.iy * sb
    return ax0 <= bx0 + sb and bx0 <= ax0 + sa and ay0 <= by0 + sb and by0 <= ay0 + sa


def _build_adjacency(
    cubes: tuple[WhitneyCube, ...], index: dict[WhitneyCube, int]
) -> sparse.csr_matrix:
    """Symmetric adjacency of cubes whose closures intersect, searched two levels deep."""
    rows: list[int] = []
    cols: list[int] = []
    for i, cube in enumerate(cubes):
        for lvl in (cube.level, cube.level + 1, cube.level + 2):
            shift = lvl - cube.level
            lo_x, hi_x = (cube.ix << shift) - 1, (cube.ix + 1) << shift
            lo_y, hi_y = (cube.iy << shift) - 1, (cube.iy + 1) << shift
            for jx in range(lo_x, hi_x + 1):
                for jy in range(lo_y, hi_y + 1):
                    j = index.get(WhitneyCube(lvl, jx, jy))
                    if j is None or j == i:
                        continue
                    if lvl == cube.level and j < i:
                        continue
                    if _closures_touch(cube, cubes[j]):
                        rows.extend((i, j))
                        cols.extend((j, i))
    n = len(cubes)
    data = np.ones(len(rows), dtype=np.int8)
    adj = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    adj.data[:] = 1
    return adj


def neighbors(decomp: WhitneyDecomposition, q: int) -> list[int]:
    """Cubes whose closures meet the closure of cube ``q``."""
    if not 0 <= q < len(decomp.cubes):
        raise WhitneyError(f"Unknown cube id {q}")
    adj = decomp.adjacency
    return sorted(int(j) for j in adj.indices[adj.indptr[q] : adj.indptr[q + 1]])


def max_level_gap(decomp: WhitneyDecomposition) -> int:
    """Largest level difference between adjacent cubes."""
    coo = decomp.adjacency.tocoo()
    if coo.nnz == 0:
        return 0
    levels = decomp.levels
    return int(np.abs(levels[coo.row] - levels[coo.col]).max())


def is_connected(decomp: WhitneyDecomposition) -> bool:
    count, _ = connected_components(decomp.adjacency, directed=False)
    return count == 1


def overlap_multiplicity(decomp: WhitneyDecomposition, samples: int = 4) -> int:
    """Largest number of open dilated cubes 2Q covering a sample point.

    2Q lies inside the union of Q and its neighbors, so each sample point only
    needs testing against its own cube and that cube's neighbors.
    """
    adj = decomp.adjacency
    centers = decomp.centers
    sides = decomp.sides
    offsets = (np.arange(samples) + 0.5) / samples
    ox, oy = np.meshgrid(offsets, offsets, indexing="ij")
    best = 0
    for i, cube in enumerate(decomp.cubes):
        x0, y0, _, _ = cube.box
        pts = np.column_stack([x0 + ox.ravel() * cube.side, y0 + oy.ravel() * cube.side])
        cand = np.concatenate([[i], adj.indices[adj.indptr[i] : adj.indptr[i + 1]]])
        dx = np.abs(pts[:, 0:1] - centers[cand, 0][None, :])
        dy = np.abs(pts[:, 1:2] - centers[cand, 1][None, :])
        inside = (dx < sides[cand][None, :]) & (dy < sides[cand][None, :])
        best = max(best, int(inside.sum(axis=1).max()))
    return best
