"""Constant-estimation CLI commands."""

from __future__ import annotations

from pathlib import Path

import typer

from kornlab.cli.common import (
    build_config,
    execute,
    parse_floats,
    read_json,
    read_params,
    read_rooms,
)

app = typer.Typer(help="Best-constant estimates and blow-up")


@app.command("estimate")
def estimate(
    ctx: typer.Context,
    domain: Path = typer.Option(..., "--domain", help="Domain spec JSON file"),
    kind: str = typer.Option(
        "poincare", "--kind", help="poincare, korn, korn-tilde or korn-lp-cube"
    ),
    params_file: Path | None = typer.Option(None, "--params", help="Exponent params JSON file"),
    p: float | None = typer.Option(None, "--p", help="Exponent p"),
    a: float | None = typer.Option(None, "--a", help="Weight exponent a"),
    b: float | None = typer.Option(None, "--b", help="Weight exponent b"),
    cube: str | None = typer.Option(None, "--q-cube", help="Interior cube x0,y0,x1,y1"),
    h: float | None = typer.Option(None, "--h", help="Grid spacing"),
    budget: int = typer.Option(200, "--budget", help="Iterations per restart"),
):
    """Lower-bound estimate of a Poincaré or Korn constant."""
    config = build_config(
        ctx,
        "constants estimate",
        domain=read_json(domain),
        params=read_params(params_file, p=p, a=a, b=b),
        resolution={"h": h},
        options={"kind": kind, "cube": parse_floats(cube, 4, "--q-cube"), "budget": budget},
    )
    execute(ctx, config)


@app.command("blowup")
def blowup(
    ctx: typer.Context,
    spec: Path | None = typer.Option(None, "--spec", help="Rooms spec JSON file"),
    params_file: Path | None = typer.Option(None, "--params", help="Exponent params JSON file"),
    rooms: str = typer.Option("1..4", "--rooms", help="Room indices, e.g. 1..4"),
    kind: str = typer.Option("korn", "--kind", help="korn, korn-tilde or korn-lp-cube"),
    room_cells: int = typer.Option(64, "--room-cells", help="Grid cells across each room"),
):
    """Quotients of the room test fields; writes blowup.csv."""
    config = build_config(
        ctx,
        "constants blowup",
        rooms=read_rooms(spec) if spec else None,
        params=read_params(params_file),
        options={"rooms": rooms, "kind": kind, "room_cells": room_cells},
    )
    execute(ctx, config)


@app.command("pipeline")
def pipeline(
    ctx: typer.Context,
    domain: Path = typer.Option(..., "--domain", help="Domain spec JSON file"),
    cube: str = typer.Option(..., "--q-cube", help="Interior cube x0,y0,x1,y1"),
    params_file: Path | None = typer.Option(None, "--params", help="Exponent params JSON file"),
    p: float | None = typer.Option(None, "--p", help="Exponent p"),
    a: float | None = typer.Option(None, "--a", help="Weight exponent a"),
    b: float | None = typer.Option(None, "--b", help="Weight exponent b"),
    h: float | None = typer.Option(None, "--h", help="Grid spacing"),
    budget: int = typer.Option(200, "--budget", help="Iterations per restart"),
):
    """Check the Korn to Poincaré transfer on ramps over admissible rectangles."""
    config = build_config(
        ctx,
        "constants pipeline",
        domain=read_json(domain),
        params=read_params(params_file, p=p, a=a, b=b),
        resolution={"h": h},
        options={"cube": parse_floats(cube, 4, "--q-cube"), "budget": budget},
    )
    execute(ctx, config)
