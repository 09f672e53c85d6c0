"""Experiment dispatch shared by every subcommand and by ``--config`` runs."""

from __future__ import annotations

import csv
import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from kornlab import __version__
from kornlab.config import ExperimentConfig
from kornlab.constants import (
    QuotientProblem,
    blowup_experiment,
    estimate_constant,
    korn_poincare_pipeline,
)
from kornlab.divsolve import solve_divergence
from kornlab.errors import FieldError, GeometryError, ScalingError
from kornlab.fields import Grid, ScalarField, example_field, field_rows
from kornlab.gallery import l_shape, rooms_and_corridors, square, strip
from kornlab.geom import (
    RectDomain,
    max_level_gap,
    overlap_multiplicity,
    whitney_decompose,
)
from kornlab.models import RoomsSpec, RunReport, Verdict
from kornlab.qhyp import (
    build_graph,
    check_qhbc,
    check_sjohn,
    geodesic_chains,
    qh_distance,
    shadow_diameter_fit,
)
from kornlab.report import emit_plot_data, write_csv, write_json
from kornlab.scaling import (
    QUANTITIES,
    HPolicy,
    exponent_condition_qhbc,
    korn_verdict_qhbc,
    korn_verdict_sjohn,
    measure_scaling,
    poincare_verdict_qhbc,
    poincare_verdict_sjohn,
    predicted_exponents,
    reduced_verdict_qhbc,
    reduced_verdict_sjohn,
    room_grids,
    room_integrals,
)

logger = logging.getLogger(__name__)


@dataclass
class Outcome:
    """What a command produced: payload, verdicts and side files."""

    results: dict[str, Any] = field(default_factory=dict)
    verdicts: dict[str, str] = field(default_factory=dict)
    primary: Verdict | None = None
    tables: dict[str, tuple[list[str], list[list[Any]]]] = field(default_factory=dict)
    documents: dict[str, Any] = field(default_factory=dict)


def load_domain(spec: dict[str, Any] | None) -> RectDomain:
    """A domain file, or a gallery entry such as {"gallery": "l_shape", "arm": 1, ...}."""
    if spec is None:
        raise GeometryError("command needs a domain")
    if "gallery" not in spec:
        return RectDomain.from_spec(spec)
    kind = spec["gallery"]
    args = {k: v for k, v in spec.items() if k != "gallery"}
    if kind == "square":
        return square(**args)
    if kind == "strip":
        return strip(**args)
    if kind == "l_shape":
        return l_shape(**args)
    if kind == "rooms":
        return rooms_and_corridors(RoomsSpec(**args))[0]
    raise GeometryError(f"unknown gallery domain '{kind}'")


def parse_range(text: str | list[int] | None) -> list[int] | None:
    """'1..4' or '1,3,4' into a list of room indices."""
    if text is None or isinstance(text, list):
        return text
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def _point(value: Any) -> tuple[float, float] | None:
    if value is None:
        return None
    x, y = (float(v) for v in value)
    return (x, y)


def _worst(verdicts: list[Verdict]) -> Verdict:
    for bad in (Verdict.MISMATCH, Verdict.FAILS):
        if bad in verdicts:
            return bad
    return verdicts[0] if verdicts else Verdict.INCONCLUSIVE


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _geom_whitney(config: ExperimentConfig) -> Outcome:
    domain = load_domain(config.domain)
    opts = config.options
    decomp = whitney_decompose(
        domain,
        config.resolution.min_level,
        x0=_point(opts.get("x0")),
        relative=bool(opts.get("relative", False)),
    )
    gap = max_level_gap(decomp)
    mult = overlap_multiplicity(decomp)
    rows = [
        [c.level, c.ix, c.iy, float(d), *c.box] for c, d in zip(decomp.cubes, decomp.dist)
    ]
    out = Outcome(
        results={
            "domain": domain.to_spec(),
            "min_level": decomp.min_level,
            "count": len(decomp),
            "base": decomp.base,
            "truncated": decomp.truncated,
            "max_level_gap": gap,
            "overlap_multiplicity": mult,
        },
        verdicts={
            "level_gap": (Verdict.HOLDS if gap <= 1 else Verdict.FAILS).value,
            "overlap": (Verdict.HOLDS if mult <= 12 else Verdict.FAILS).value,
        },
    )
    header = ["level", "ix", "iy", "dist_to_boundary", "x0", "y0", "x1", "y1"]
    out.tables["cubes.csv"] = (header, rows)
    return out


def _qhyp_dist(config: ExperimentConfig) -> Outcome:
    domain = load_domain(config.domain)
    opts = config.options
    d = qh_distance(
        domain,
        _point(opts["x"]),
        _point(opts["y"]),
        config.resolution.min_level,
        relative=bool(opts.get("relative", False)),
    )
    return Outcome(results={"upper": d.upper, "lower": d.lower, "x": opts["x"], "y": opts["y"]})


def _qhyp_classify(config: ExperimentConfig) -> Outcome:
    domain = load_domain(config.domain)
    opts = config.options
    x0 = _point(opts.get("x0"))
    samples = int(opts.get("samples", 64))
    mode = opts.get("mode", "both")
    level = config.resolution.min_level
    out = Outcome()
    primary: list[Verdict] = []
    if mode in ("qhbc", "both"):
        beta, c0, fit = check_qhbc(domain, x0, samples, level)
        out.results["qhbc"] = {"beta": beta, "c0": c0, "fit": fit.model_dump(mode="json")}
        out.verdicts["qhbc"] = fit.verdict.value
        primary.append(fit.verdict)
        if fit.samples:
            out.tables["qhbc_fit.csv"] = emit_plot_data(fit, "loglog")
        if opts.get("shadows") and beta > 0:
            decomp = whitney_decompose(domain, level, x0=x0, relative=True)
            shadow = shadow_diameter_fit(decomp, geodesic_chains(build_graph(decomp)), beta)
            out.results["shadows"] = shadow.model_dump(mode="json")
            out.verdicts["shadows"] = shadow.verdict.value
    if mode in ("sjohn", "both"):
        s, c, fit = check_sjohn(domain, x0, samples, level, forced_s=opts.get("forced_s"))
        out.results["sjohn"] = {"s": s, "c": c, "fit": fit.model_dump(mode="json")}
        out.verdicts["sjohn"] = fit.verdict.value
        primary.append(fit.verdict)
    out.primary = _worst(primary)
    return out


def _gallery_rooms(config: ExperimentConfig) -> Outcome:
    spec = config.rooms or RoomsSpec()
    domain, placement = rooms_and_corridors(spec)
    out = Outcome(results={"domain": domain.to_spec(), "placement": placement.model_dump()})
    out.documents["domain.json"] = domain.to_spec()
    out.documents["placement.json"] = placement.model_dump()
    return out


def _policy(config: ExperimentConfig) -> HPolicy:
    return HPolicy(
        cells_across=config.resolution.cells_across,
        room_cells=int(config.options.get("room_cells", 64)),
    )


def _fields_eval_example(config: ExperimentConfig) -> Outcome:
    spec = config.rooms or RoomsSpec()
    domain, placement = rooms_and_corridors(spec)
    i = int(config.options.get("room", 1))
    policy = _policy(config)
    try:
        placement.room(i)
    except KeyError:
        raise FieldError(f"Room index {i} out of range 1..{len(placement.rooms)}") from None
    out = Outcome()
    for label, grid in zip(("room", "corridor"), room_grids(domain, placement, i, policy)):
        u, pieces = example_field(placement, i, grid)
        out.tables[f"u{i}_{label}.csv"] = field_rows(u)
        out.results["pieces"] = pieces
    out.results["integrals"] = room_integrals(domain, placement, i, config.params, policy)
    return out


def _scaling_predict(config: ExperimentConfig) -> Outcome:
    params = config.params
    out = Outcome(results={"exponents": predicted_exponents(params)})
    checks: dict[str, Callable] = {
        "korn_sjohn": korn_verdict_sjohn,
        "korn_qhbc": korn_verdict_qhbc,
        "poincare_sjohn": poincare_verdict_sjohn,
        "poincare_qhbc": poincare_verdict_qhbc,
        "reduced_sjohn": reduced_verdict_sjohn,
        "reduced_qhbc": reduced_verdict_qhbc,
    }
    for name, check in checks.items():
        try:
            out.verdicts[name] = check(params).value
        except ScalingError as e:
            out.verdicts[name] = "n/a"
            out.results.setdefault("skipped", {})[name] = str(e)
    ok, value = exponent_condition_qhbc(params)
    out.results["exponent_condition_qhbc"] = {"satisfied": ok, "value": value}
    if out.verdicts["korn_sjohn"] != "n/a":
        out.primary = Verdict(out.verdicts["korn_sjohn"])
    return out


def _scaling_measure(config: ExperimentConfig) -> Outcome:
    spec = config.rooms or RoomsSpec(rooms=4)
    domain, placement = rooms_and_corridors(spec)
    opts = config.options
    quantities = opts.get("quantities") or [opts.get("quantity", "room_Du")]
    if quantities == ["all"]:
        quantities = list(QUANTITIES)
    rooms = parse_range(opts.get("rooms"))
    out = Outcome()
    verdicts = []
    for quantity in quantities:
        report = measure_scaling(domain, placement, config.params, quantity, _policy(config), rooms)
        out.results[quantity] = report.model_dump(mode="json")
        out.verdicts[quantity] = report.verdict.value
        out.tables[f"scaling_{quantity}.csv"] = emit_plot_data(report, "loglog")
        verdicts.append(report.verdict)
    out.primary = _worst(verdicts)
    return out


def load_scalar(grid: Grid, path: Path) -> ScalarField:
    """Values from a field dump CSV (columns i, j, ..., value) placed on ``grid``."""
    values = np.zeros(len(grid))
    seen = 0
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            i, j = int(row["i"]), int(row["j"])
            if not (0 <= i < grid.shape[0] and 0 <= j < grid.shape[1]):
                continue
            cell = grid.lookup[i + 1, j + 1]
            if cell >= 0:
                values[cell] = float(row["value"])
                seen += 1
    if seen == 0:
        raise FieldError(f"no row of {path} matches a grid cell")
    return ScalarField(grid, values)


def _datum(grid: Grid, source: str) -> ScalarField:
    x, y = grid.xy[:, 0], grid.xy[:, 1]
    if source == "linear":
        return ScalarField(grid, x.copy())
    if source == "dipole":
        x0, y0, x1, y1 = grid.domain.bbox
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        w = 0.25 * min(x1 - x0, y1 - y0)
        r2 = ((x - cx + w) ** 2 + (y - cy) ** 2) / w**2
        l2 = ((x - cx - w) ** 2 + (y - cy) ** 2) / w**2
        return ScalarField(grid, np.exp(-8 * r2) - np.exp(-8 * l2))
    return load_scalar(grid, Path(source))


def _divsolve_run(config: ExperimentConfig) -> Outcome:
    domain = load_domain(config.domain)
    opts = config.options
    res = config.resolution
    decomp = whitney_decompose(domain, res.min_level, relative=bool(opts.get("relative", False)))
    chains = geodesic_chains(build_graph(decomp))
    grid = Grid.build(domain, res.h)
    f = _datum(grid, str(opts.get("f", "linear")))
    datum, sol = solve_divergence(f, decomp, chains, config.params, config.threads, strict=False)
    verdict = Verdict.HOLDS if sol.passed else Verdict.FAILS
    out = Outcome(
        results={
            "pieces": sum(1 for p in datum.pieces if len(p.cells)),
            "leakage": datum.leakage,
            "transfer_ratio": datum.transfer_ratio,
            "overlap_multiplicity": overlap_multiplicity(decomp),
            "residuals": sol.residuals,
            "worst": sol.worst,
            "max_local_residual": sol.max_local_residual,
            "du_norm": sol.du_norm,
            "f_norm": sol.f_norm,
            "constant": sol.constant,
            "attached_cells": int((datum.cube_of_cell < 0).sum()),
            "notes": datum.notes + sol.notes,
        },
        verdicts={"weak_form": verdict.value},
        primary=verdict,
    )
    out.tables["solution.csv"] = field_rows(sol.u)
    return out


def _constants_estimate(config: ExperimentConfig) -> Outcome:
    domain = load_domain(config.domain)
    opts = config.options
    kind = str(opts.get("kind", "poincare")).replace("-", "_")
    cube = tuple(float(c) for c in opts["cube"]) if opts.get("cube") else None
    grid = Grid.build(domain, config.resolution.h)
    problem = QuotientProblem(kind, config.params, grid, cube=cube)
    est = estimate_constant(
        problem, budget=int(opts.get("budget", 200)), seed=config.seed, threads=config.threads
    )
    return Outcome(
        results={"estimate": est.model_dump(mode="json")},
        verdicts={"converged": str(est.converged).lower()},
    )


def _constants_blowup(config: ExperimentConfig) -> Outcome:
    spec = config.rooms or RoomsSpec(rooms=4)
    opts = config.options
    kind = str(opts.get("kind", "korn")).replace("-", "_")
    report = blowup_experiment(
        spec, config.params, kind, parse_range(opts.get("rooms")), _policy(config)
    )
    out = Outcome(
        results={"blowup": report.model_dump(mode="json")},
        verdicts={"blowup": report.verdict.value, "predicted": report.predicted.value},
        primary=report.verdict,
    )
    out.tables["blowup.csv"] = (
        ["i", "r_i", "quotient", "predicted_exponent"],
        [list(row) for row in report.rows],
    )
    return out


def _constants_pipeline(config: ExperimentConfig) -> Outcome:
    domain = load_domain(config.domain)
    opts = config.options
    if not opts.get("cube"):
        raise GeometryError("the pipeline needs a cube (options.cube = [x0, y0, x1, y1])")
    cube = tuple(float(c) for c in opts["cube"])
    report = korn_poincare_pipeline(
        domain,
        config.params,
        cube,
        config.resolution.h,
        seed=config.seed,
        budget=int(opts.get("budget", 200)),
        threads=config.threads,
    )
    out = Outcome(
        results={"pipeline": report.model_dump(mode="json")},
        verdicts={"pipeline": report.verdict.value},
        primary=report.verdict,
    )
    out.tables["rectangles.csv"] = (
        ["x0", "y0", "x1", "y1", "lhs", "rhs", "holds"],
        [[*c.box, c.lhs, c.rhs, c.holds] for c in report.rectangles],
    )
    return out


COMMANDS: dict[str, Callable[[ExperimentConfig], Outcome]] = {
    "geom whitney": _geom_whitney,
    "qhyp dist": _qhyp_dist,
    "qhyp classify": _qhyp_classify,
    "gallery rooms": _gallery_rooms,
    "fields eval-example": _fields_eval_example,
    "scaling predict": _scaling_predict,
    "scaling measure": _scaling_measure,
    "divsolve run": _divsolve_run,
    "constants estimate": _constants_estimate,
    "constants blowup": _constants_blowup,
    "constants pipeline": _constants_pipeline,
}


def run(config: ExperimentConfig, write: bool = True) -> tuple[RunReport, Outcome]:
    """Execute one experiment and write report.json plus its CSV files to out_dir."""
    handler = COMMANDS[config.command]
    start = time.perf_counter()
    outcome = handler(config)
    elapsed = time.perf_counter() - start
    if outcome.primary is not None:
        outcome.verdicts.setdefault("primary", outcome.primary.value)
    report = RunReport(
        command=config.command,
        version=__version__,
        seed=config.seed,
        config=config.model_dump(mode="json"),
        timings={config.command: elapsed},
        results=outcome.results,
        verdicts=outcome.verdicts,
    )
    if write:
        out_dir = Path(config.out_dir)
        write_json(out_dir / "report.json", report)
        for name, doc in outcome.documents.items():
            write_json(out_dir / name, doc)
        for name, (header, rows) in outcome.tables.items():
            write_csv(out_dir / name, header, rows)
        logger.info("Wrote report and %d tables to %s", len(outcome.tables), out_dir)
    return report, outcome


def expectation_met(expect: str | None, primary: Verdict | None) -> bool:
    """True unless an expectation was declared and the primary verdict contradicts it."""
    if expect is None or primary is None:
        return True
    if expect == "holds":
        return primary in (Verdict.HOLDS, Verdict.CONSISTENT_HOLDS)
    return primary is Verdict.FAILS
