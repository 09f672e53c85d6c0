"""Field CLI commands."""

from __future__ import annotations

from pathlib import Path

import typer

from kornlab.cli.common import build_config, execute, read_params, read_rooms

app = typer.Typer(help="Grid fields and the room test fields")


@app.command("eval-example")
def eval_example(
    ctx: typer.Context,
    spec: Path | None = typer.Option(None, "--spec", help="Rooms spec JSON file"),
    count: int | None = typer.Option(None, "--rooms", help="Number of rooms N"),
    room: int = typer.Option(1, "--room", help="Room index i"),
    room_cells: int = typer.Option(64, "--room-cells", help="Grid cells across room i"),
    params_file: Path | None = typer.Option(None, "--params", help="Exponent params JSON file"),
):
    """Sample the room test field u_i and its weighted integrals."""
    config = build_config(
        ctx,
        "fields eval-example",
        rooms=read_rooms(spec, rooms=count),
        params=read_params(params_file),
        options={"room": room, "room_cells": room_cells},
    )
    execute(ctx, config)
