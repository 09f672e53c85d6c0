"""Report models written as JSON by the CLI."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field

from kornlab.models.params import ExponentParams, Verdict


class RoomPlacement(BaseModel):
    """Position of one room and its corridor below the unit square."""

    index: int
    x: float
    r: float
    corridor: list[float]  # x0, y0, x1, y1
    room: list[float]
    center: list[float]


class PlacementTable(BaseModel):
    """Placement sidecar of a rooms-and-corridors domain."""

    sigma: float
    tau: float
    gap: float
    rescale: float = 1.0
    rooms: list[RoomPlacement] = Field(default_factory=list)

    def room(self, i: int) -> RoomPlacement:
        for placement in self.rooms:
            if placement.index == i:
                return placement
        raise KeyError(i)


class FitReport(BaseModel):
    """Least-squares log-log fit with a verdict against a supplied exponent."""

    samples: list[tuple[float, float]] = Field(default_factory=list)
    slope: float = 0.0
    intercept: float = 0.0
    r_squared: float = 0.0
    verdict: Verdict = Verdict.INCONCLUSIVE
    witness: list[float] | None = None
    notes: list[str] = Field(default_factory=list)


class ScalingReport(BaseModel):
    """Measured per-room integrals against the predicted exponent."""

    params: ExponentParams
    quantity: str
    samples: list[tuple[float, float]] = Field(default_factory=list)
    fitted_slope: float = 0.0
    predicted_slope: float = 0.0
    rel_error: float = 0.0
    verdict: Verdict = Verdict.INCONCLUSIVE
    intercept: float = 0.0
    notes: list[str] = Field(default_factory=list)


class ConstantEstimate(BaseModel):
    """Certified lower bound on a best constant."""

    kind: str
    lower_bound: float
    method: str  # eigen | ascent | test_field
    iterations: int = 0
    converged: bool = False
    seed: int = 0
    restarts: list[float] = Field(default_factory=list)
    maximizer: list[list[float]] | None = Field(default=None, exclude=True)


class BlowupReport(BaseModel):
    """Quotient sequence along the rooms of a gallery domain."""

    params: ExponentParams
    kind: str
    rows: list[tuple[int, float, float, float]] = Field(default_factory=list)
    predicted: Verdict
    growth: float
    verdict: Verdict


class RunReport(BaseModel):
    """Top-level JSON report of one CLI run."""

    command: str
    version: str
    seed: int
    config: dict[str, Any] = Field(default_factory=dict)
    timings: dict[str, float] = Field(default_factory=dict)
    results: dict[str, Any] = Field(default_factory=dict)
    verdicts: dict[str, str] = Field(default_factory=dict)


class RectangleCheck(BaseModel):
    """One admissible rectangle A and both sides of ∫_A ρ^a ≤ C ∫ |∇u|^p ρ^(b-p)."""

    box: list[float]
    lhs: float
    rhs: float
    holds: bool


class PipelineReport(BaseModel):
    """Rotation-field bound and the Korn to Poincaré transfer on a rectangle family."""

    params: ExponentParams
    cube: list[float]
    pointwise_ok: bool
    max_excess: float
    korn_constant: float
    constant: float
    rectangles: list[RectangleCheck] = Field(default_factory=list)
    verdict: Verdict = Verdict.INCONCLUSIVE
