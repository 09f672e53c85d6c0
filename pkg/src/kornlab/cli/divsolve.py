"""Divergence-solver CLI commands."""

from __future__ import annotations

from pathlib import Path

import typer

from kornlab.cli.common import build_config, execute, read_json, read_params

app = typer.Typer(help="Weighted divergence equation")


@app.command("run")
def run_solver(
    ctx: typer.Context,
    domain: Path = typer.Option(..., "--domain", help="Domain spec JSON file"),
    f: str = typer.Option(
        "linear", "--f", help="Datum: linear, dipole or a field dump CSV (projected to mean zero)"
    ),
    params_file: Path | None = typer.Option(None, "--params", help="Exponent params JSON file"),
    p: float | None = typer.Option(None, "--p", help="Exponent p"),
    q: float | None = typer.Option(None, "--q", help="Exponent q"),
    a: float | None = typer.Option(None, "--a", help="Weight exponent a"),
    b: float | None = typer.Option(None, "--b", help="Weight exponent b"),
    min_level: int | None = typer.Option(None, "--min-level", help="Coarsest dyadic level"),
    h: float | None = typer.Option(None, "--h", help="Grid spacing"),
):
    """Solve div u = f with weighted bounds; writes solution.csv and report.json."""
    config = build_config(
        ctx,
        "divsolve run",
        domain=read_json(domain),
        params=read_params(params_file, p=p, q=q, a=a, b=b),
        resolution={"min_level": min_level, "h": h},
        options={"f": f},
    )
    execute(ctx, config)
