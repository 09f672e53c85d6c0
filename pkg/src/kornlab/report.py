"""JSON reports with 17-digit floats and CSV plot data."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from kornlab.errors import ReportError
from kornlab.models import BlowupReport, FitReport, ScalingReport


def _float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return format(x, ".17g")


def _plain(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with sorted keys and every float written to 17 significant digits."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}"
            for k in sorted(obj, key=str)
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise ReportError(f"cannot serialize {type(obj).__name__}")


def write_json(path: Path, obj: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")
    return path


def write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_float(v) if isinstance(v, float) else v for v in row])
    return path


def emit_plot_data(
    report: ScalingReport | FitReport | BlowupReport, kind: str = "loglog"
) -> tuple[list[str], list[list[float]]]:
    """Header and rows of a plot-data CSV.

    loglog: a ScalingReport gives r_i, integral, predicted (the predicted slope
    through the geometric mean of the samples); a FitReport gives x, y.
    sequence: a BlowupReport gives i, r_i, quotient.
    """
    if kind == "sequence":
        if not isinstance(report, BlowupReport):
            raise ReportError("sequence plot data needs a blow-up report")
        if not report.rows:
            raise ReportError("report has no samples")
        return ["i", "r_i", "quotient"], [[i, r, q] for i, r, q, _ in report.rows]
    if kind != "loglog":
        raise ReportError(f"unknown plot kind '{kind}', expected loglog or sequence")
    if isinstance(report, BlowupReport):
        raise ReportError("blow-up reports are plotted as a sequence")
    if not report.samples:
        raise ReportError("report has no samples")
    if isinstance(report, FitReport):
        return ["x", "y"], [[x, y] for x, y in report.samples]
    xs = np.array([s[0] for s in report.samples])
    ys = np.array([s[1] for s in report.samples])
    shift = float(np.mean(np.log(ys) - report.predicted_slope * np.log(xs)))
    predicted = np.exp(shift + report.predicted_slope * np.log(xs))
    return ["r_i", "integral", "predicted"], [
        [float(x), float(y), float(p)] for x, y, p in zip(xs, ys, predicted)
    ]
