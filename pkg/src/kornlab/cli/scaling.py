"""Scaling CLI commands."""

from __future__ import annotations

from pathlib import Path

import typer

from kornlab.cli.common import build_config, execute, read_params, read_rooms

app = typer.Typer(help="Exponent predictions and slope measurements")


@app.command("predict")
def predict(
    ctx: typer.Context,
    params_file: Path | None = typer.Option(None, "--params", help="Exponent params JSON file"),
):
    """Predicted room exponents and every threshold verdict."""
    execute(ctx, build_config(ctx, "scaling predict", params=read_params(params_file)))


@app.command("measure")
def measure(
    ctx: typer.Context,
    spec: Path | None = typer.Option(None, "--spec", help="Rooms spec JSON file"),
    params_file: Path | None = typer.Option(None, "--params", help="Exponent params JSON file"),
    quantity: str = typer.Option(
        "room_Du", "--quantity", help="room_Du, corridor_eps, room_u or all"
    ),
    rooms: str | None = typer.Option(None, "--rooms", help="Room indices, e.g. 1..4"),
    room_cells: int = typer.Option(64, "--room-cells", help="Grid cells across each room"),
):
    """Measure log-log slopes of the room integrals against the predictions."""
    config = build_config(
        ctx,
        "scaling measure",
        rooms=read_rooms(spec) if spec else None,
        params=read_params(params_file),
        options={"quantity": quantity, "rooms": rooms, "room_cells": room_cells},
    )
    execute(ctx, config)
