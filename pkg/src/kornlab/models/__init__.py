"""Pydantic models for kornlab."""

from kornlab.models.params import ExponentParams, RoomsSpec, Verdict
from kornlab.models.reports import (
    BlowupReport,
    ConstantEstimate,
    FitReport,
    PipelineReport,
    PlacementTable,
    RectangleCheck,
    RoomPlacement,
    RunReport,
    ScalingReport,
)

__all__ = [
    # Parameters
    "ExponentParams",
    "RoomsSpec",
    "Verdict",
    # Reports
    "BlowupReport",
    "ConstantEstimate",
    "FitReport",
    "PipelineReport",
    "PlacementTable",
    "RectangleCheck",
    "RoomPlacement",
    "RunReport",
    "ScalingReport",
]
