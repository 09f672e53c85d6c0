"""Exponent and gallery parameter models.

These are the file formats read by the CLI (``--params p.json``,
``--spec rooms.json``) and the typed inputs of the numerical modules.
"""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Verdict(str, Enum):
    """Outcome of a threshold predicate or an experiment."""

    HOLDS = "holds"
    FAILS = "fails"
    BORDERLINE = "borderline"
    NOT_GUARANTEED = "not_guaranteed"
    INCONCLUSIVE = "inconclusive"
    CONSISTENT_HOLDS = "consistent-holds"
    MISMATCH = "mismatch"


class ExponentParams(BaseModel):
    """Every exponent symbol appearing in the inequalities."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    p: float = Field(default=2.0, ge=1.0)
    q: float = Field(default=2.0, ge=1.0)
    a: float = Field(default=0.0, ge=0.0)
    b: float = 0.0
    s: float = Field(default=1.0, ge=1.0)
    sigma: float = Field(default=1.0, ge=1.0)
    tau: float = Field(default=1.0, ge=1.0)
    beta: float = Field(default=1.0, gt=0.0, le=1.0)
    n: int = Field(default=2, ge=2)

    @property
    def conjugate(self) -> float:
        """Hölder conjugate of p."""
        return self.p / (self.p - 1.0) if self.p > 1.0 else float("inf")


class RoomsSpec(BaseModel):
    """Rooms-and-corridors parameters.

    Either ``room_sides`` is given explicitly or the sides decay geometrically
    as ``ratio ** -i`` for i = 1..rooms.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    sigma: float = Field(default=2.0, ge=1.0)
    tau: float = Field(default=1.0, ge=1.0)
    ratio: float = Field(default=4.0, ge=4.0)
    rooms: int = Field(default=3, ge=0)
    room_sides: list[float] | None = None

    @field_validator("room_sides")
    @classmethod
    def _decreasing(cls, v: list[float] | None) -> list[float] | None:
        if v is None:
            return v
        if any(r <= 0 or r >= 1 for r in v):
            raise ValueError("room sides must lie in (0, 1)")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("room sides must be strictly decreasing")
        return v

    @model_validator(mode="after")
    def _count(self) -> RoomsSpec:
        if self.room_sides is not None and len(self.room_sides) != self.rooms:
            raise ValueError(f"rooms={self.rooms} but {len(self.room_sides)} room sides given")
        return self

    def sides(self) -> list[float]:
        if self.room_sides is not None:
            return list(self.room_sides)
        return [self.ratio ** -(i + 1) for i in range(self.rooms)]
