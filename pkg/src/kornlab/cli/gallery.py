"""Gallery CLI commands."""

from __future__ import annotations

from pathlib import Path

import typer

from kornlab.cli.common import build_config, execute, read_rooms

app = typer.Typer(help="Domain generators")


@app.command("rooms")
def rooms(
    ctx: typer.Context,
    spec: Path | None = typer.Option(None, "--spec", help="Rooms spec JSON file"),
    sigma: float | None = typer.Option(None, "--sigma", help="Corridor width exponent σ"),
    tau: float | None = typer.Option(None, "--tau", help="Corridor length exponent τ"),
    ratio: float | None = typer.Option(None, "--ratio", help="Room size ratio λ"),
    count: int | None = typer.Option(None, "--rooms", help="Number of rooms N"),
):
    """Build a rooms-and-corridors domain; writes domain.json and placement.json."""
    rooms_spec = read_rooms(spec, sigma=sigma, tau=tau, ratio=ratio, rooms=count)
    execute(ctx, build_config(ctx, "gallery rooms", rooms=rooms_spec))
