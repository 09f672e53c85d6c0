"""Geometry CLI commands."""

from __future__ import annotations

from pathlib import Path

import typer

from kornlab.cli.common import build_config, execute, parse_floats, read_json

app = typer.Typer(help="Rectilinear domains and Whitney decompositions")


@app.command("whitney")
def whitney(
    ctx: typer.Context,
    domain: Path = typer.Option(..., "--domain", help="Domain spec JSON file"),
    min_level: int | None = typer.Option(None, "--min-level", help="Coarsest dyadic level"),
    relative: bool = typer.Option(
        False, "--relative", help="Refine only along the boundary seen from --x0"
    ),
    x0: str | None = typer.Option(None, "--x0", help="Base point x,y"),
):
    """Decompose a domain into Whitney cubes and write cubes.csv."""
    config = build_config(
        ctx,
        "geom whitney",
        domain=read_json(domain),
        resolution={"min_level": min_level},
        options={"relative": relative, "x0": parse_floats(x0, 2, "--x0")},
    )
    execute(ctx, config)
