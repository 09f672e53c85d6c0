"""Grid fields, discrete differential operators and weighted norms."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from kornlab.errors import FieldError
from kornlab.geom import Point, RectDomain, boundary_distance_many, contains_many
from kornlab.models import PlacementTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform cells of spacing h whose centers lie in the domain.

    The lattice starts at the lower-left corner of ``window`` (the domain's
    bounding box by default). Cells whose center sits exactly on the boundary
    are dropped so that every cached ρ is positive.
    """

    domain: RectDomain
    h: float
    origin: tuple[float, float]
    shape: tuple[int, int]
    ij: np.ndarray
    xy: np.ndarray
    rho: np.ndarray

    @classmethod
    def build(
        cls,
        domain: RectDomain,
        h: float,
        window: tuple[float, float, float, float] | None = None,
    ) -> Grid:
        if h <= 0:
            raise FieldError(f"grid spacing must be positive, got {h}")
        x0, y0, x1, y1 = window if window is not None else domain.bbox
        nx = max(1, math.ceil((x1 - x0) / h - 1e-9))
        ny = max(1, math.ceil((y1 - y0) / h - 1e-9))
        gi, gj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        ij = np.column_stack([gi.ravel(), gj.ravel()])
        xy = np.column_stack([x0 + (ij[:, 0] + 0.5) * h, y0 + (ij[:, 1] + 0.5) * h])
        keep = contains_many(domain, xy)
        ij, xy = ij[keep], xy[keep]
        rho = boundary_distance_many(domain, xy) if len(xy) else np.empty(0)
        pos = rho > 0
        grid = cls(domain, h, (x0, y0), (nx, ny), ij[pos], xy[pos], rho[pos])
        logger.debug("Grid on %s: h=%.3g, %d cells", domain.name, h, len(grid))
        return grid

    def __len__(self) -> int:
        return len(self.ij)

    @cached_property
    def lookup(self) -> np.ndarray:
        """Dense (nx + 2, ny + 2) map from lattice position to cell id, -1 outside."""
        table = np.full((self.shape[0] + 2, self.shape[1] + 2), -1, dtype=np.int64)
        table[self.ij[:, 0] + 1, self.ij[:, 1] + 1] = np.arange(len(self.ij))
        return table

    def shifted(self, dx: int, dy: int) -> np.ndarray:
        """Cell id of the (dx, dy) lattice neighbor of every cell, -1 when absent."""
        return self.lookup[self.ij[:, 0] + 1 + dx, self.ij[:, 1] + 1 + dy]

    def in_box(self, box: tuple[float, float, float, float] | list[float]) -> np.ndarray:
        x0, y0, x1, y1 = box
        x, y = self.xy[:, 0], self.xy[:, 1]
        return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)

    def interior(self) -> np.ndarray:
        """Cells with all four lattice neighbors present."""
        ok = np.ones(len(self), dtype=bool)
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ok &= self.shifted(dx, dy) >= 0
        return ok


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        x, y = grid.xy[:, 0], grid.xy[:, 1]
        return cls(grid, np.broadcast_to(np.asarray(fn(x, y), dtype=float), (len(grid),)).copy())

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    values: np.ndarray  # (M, 2)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray, np.ndarray], tuple]):
        x, y = grid.xy[:, 0], grid.xy[:, 1]
        v1, v2 = fn(x, y)
        values = np.column_stack(
            [np.broadcast_to(v1, x.shape), np.broadcast_to(v2, x.shape)]
        ).astype(float)
        return cls(grid, values)

    def magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)


@dataclass(frozen=True, eq=False)
class TensorField:
    grid: Grid
    values: np.ndarray  # (M, 2, 2), values[:, i, j] = d v_i / d x_j

    def magnitude(self) -> np.ndarray:
        return np.sqrt((self.values**2).sum(axis=(1, 2)))


Field = ScalarField | VectorField | TensorField


def _partials(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Central differences where both neighbors exist, one-sided otherwise; shape (M, 2)."""
    out = np.empty((len(grid), 2))
    for axis, (dx, dy) in enumerate(((1, 0), (0, 1))):
        plus = grid.shifted(dx, dy)
        minus = grid.shifted(-dx, -dy)
        has_p, has_m = plus >= 0, minus >= 0
        if not (has_p | has_m).all():
            bad = grid.xy[np.argmin(has_p | has_m)]
            raise FieldError(
                f"Isolated cell at ({bad[0]:.6g}, {bad[1]:.6g}) has no neighbor along axis {axis}"
            )
        here = values
        vp = np.where(has_p, values[np.where(has_p, plus, 0)], here)
        vm = np.where(has_m, values[np.where(has_m, minus, 0)], here)
        span = (has_p.astype(float) + has_m.astype(float)) * grid.h
        out[:, axis] = (vp - vm) / span
    return out


def gradient(u: ScalarField) -> VectorField:
    if len(u.grid) == 0:
        raise FieldError("gradient of a field on an empty grid")
    return VectorField(u.grid, _partials(u.grid, u.values))


def sym_gradient(v: VectorField) -> tuple[TensorField, TensorField]:
    """Full gradient D v and its symmetric part ε(v) = (D v + D vᵀ) / 2."""
    if len(v.grid) == 0:
        raise FieldError("gradient of a field on an empty grid")
    d = np.empty((len(v.grid), 2, 2))
    d[:, 0, :] = _partials(v.grid, v.values[:, 0])
    d[:, 1, :] = _partials(v.grid, v.values[:, 1])
    eps = 0.5 * (d + d.transpose(0, 2, 1))
    return TensorField(v.grid, d), TensorField(v.grid, eps)


def divergence(v: VectorField) -> ScalarField:
    d, _ = sym_gradient(v)
    return ScalarField(v.grid, d.values[:, 0, 0] + d.values[:, 1, 1])


def _weights(grid: Grid, a: float, mask: np.ndarray | None) -> np.ndarray:
    w = grid.rho**a * grid.h**2 if a != 0 else np.full(len(grid), grid.h**2)
    if mask is not None:
        w = np.where(mask, w, 0.0)
    return w


def weighted_lp_norm(f: Field, p: float, a: float, mask: np.ndarray | None = None) -> float:
    """Midpoint value of (∫ |f|^p ρ^a dx)^(1/p); magnitudes are Euclidean or Frobenius."""
    if p < 1:
        raise FieldError(f"Lebesgue exponent must be >= 1, got {p}")
    mag = f.magnitude()
    total = float(np.sum(mag**p * _weights(f.grid, a, mask)))
    return total ** (1.0 / p)


def weighted_integral(values: np.ndarray, grid: Grid, a: float, mask=None) -> float:
    return float(np.sum(values * _weights(grid, a, mask)))


def weighted_mean(u: ScalarField, a: float, mask: np.ndarray | None = None) -> float:
    w = _weights(u.grid, a, mask)
    return float(np.sum(u.values * w) / np.sum(w))


def example_field(placement: PlacementTable, i: int, grid: Grid) -> tuple[VectorField, dict]:
    """Sample the piecewise polynomial field u_i attached to room i.

    On the room it is (2y + r^τ, -2(x - x_i)); on the corridor it is
    (-y²/r^τ, 2(x - x_i) y / r^τ); elsewhere zero.
    """
    try:
        room = placement.room(i)
    except KeyError:
        raise FieldError(f"Room index {i} out of range 1..{len(placement.rooms)}") from None
    t = room.r**placement.tau
    x, y = grid.xy[:, 0], grid.xy[:, 1]
    in_room = grid.in_box(room.room)
    in_corr = grid.in_box(room.corridor) & ~in_room
    values = np.zeros((len(grid), 2))
    values[in_room, 0] = 2 * y[in_room] + t
    values[in_room, 1] = -2 * (x[in_room] - room.x)
    values[in_corr, 0] = -y[in_corr] ** 2 / t
    values[in_corr, 1] = 2 * (x[in_corr] - room.x) * y[in_corr] / t
    pieces = {
        "room": {"box": room.room, "u": "(2y + r^tau, -2(x - x_i))"},
        "corridor": {"box": room.corridor, "u": "(-y^2 / r^tau, 2 (x - x_i) y / r^tau)"},
        "x_i": room.x,
        "r_i": room.r,
        "r_tau": t,
    }
    return VectorField(grid, values), pieces


def rotation_test_field(u: ScalarField, y: Point | tuple[float, float]) -> VectorField:
    """v = ((x₂ - y₂) u, (y₁ - x₁) u)."""
    x = u.grid.xy
    v1 = (x[:, 1] - y[1]) * u.values
    v2 = (y[0] - x[:, 0]) * u.values
    return VectorField(u.grid, np.column_stack([v1, v2]))


def field_rows(f: Field) -> tuple[list[str], list[list[float]]]:
    """Header and rows of the field dump format: i, j, x, y, rho, value(s)."""
    g = f.grid
    vals = f.values.reshape(len(g), -1)
    names = ["value"] if vals.shape[1] == 1 else [f"value{k + 1}" for k in range(vals.shape[1])]
    header = ["i", "j", "x", "y", "rho", *names]
    rows = [
        [int(g.ij[c, 0]), int(g.ij[c, 1]), g.xy[c, 0], g.xy[c, 1], g.rho[c], *vals[c]]
        for c in range(len(g))
    ]
    return header, rows
