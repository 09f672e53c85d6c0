"""Quasihyperbolic CLI commands."""

from __future__ import annotations

from pathlib import Path

import typer

from kornlab.cli.common import build_config, execute, fail, parse_floats, read_json

app = typer.Typer(help="Quasihyperbolic distance and domain classifiers")


@app.command("dist")
def dist(
    ctx: typer.Context,
    domain: Path = typer.Option(..., "--domain", help="Domain spec JSON file"),
    x: str = typer.Option(..., "--from", help="First point x,y"),
    y: str = typer.Option(..., "--to", help="Second point x,y"),
    min_level: int | None = typer.Option(None, "--min-level", help="Coarsest dyadic level"),
    relative: bool = typer.Option(False, "--relative", help="Relative truncation"),
):
    """Quasihyperbolic distance between two points, with its lower bound."""
    config = build_config(
        ctx,
        "qhyp dist",
        domain=read_json(domain),
        resolution={"min_level": min_level},
        options={
            "x": parse_floats(x, 2, "--from"),
            "y": parse_floats(y, 2, "--to"),
            "relative": relative,
        },
    )
    execute(ctx, config)


@app.command("classify")
def classify(
    ctx: typer.Context,
    domain: Path = typer.Option(..., "--domain", help="Domain spec JSON file"),
    mode: str = typer.Option("both", "--mode", help="qhbc, sjohn or both"),
    samples: int = typer.Option(64, "--samples", help="Number of sample points"),
    x0: str | None = typer.Option(None, "--x0", help="Base point x,y (default: deepest cube)"),
    min_level: int | None = typer.Option(None, "--min-level", help="Coarsest dyadic level"),
    shadows: bool = typer.Option(False, "--shadows", help="Also fit shadow diameters"),
    forced_s: float | None = typer.Option(None, "--forced-s", help="Test this s, no fit"),
):
    """Estimate the QHBC exponent β and the s-John exponent of a domain."""
    if mode not in ("qhbc", "sjohn", "both"):
        fail(f"--mode must be qhbc, sjohn or both, got '{mode}'")
    config = build_config(
        ctx,
        "qhyp classify",
        domain=read_json(domain),
        resolution={"min_level": min_level},
        options={
            "mode": mode,
            "samples": samples,
            "x0": parse_floats(x0, 2, "--x0"),
            "shadows": shadows,
            "forced_s": forced_s,
        },
    )
    execute(ctx, config)
