"""Helpers shared by the CLI sub-apps: state, input files, output and exit codes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from kornlab.cli.runner import expectation_met, run
from kornlab.config import ExperimentConfig, ResolutionConfig
from kornlab.errors import KornlabError
from kornlab.models import ExponentParams, RoomsSpec, RunReport
from kornlab.report import dumps

console = Console()


@dataclass
class LabState:
    """Global options collected by the root callback."""

    seed: int = 0
    threads: int = 1
    out_dir: str = "."
    expect: str | None = None
    output: str = "table"
    resolution: ResolutionConfig = field(default_factory=ResolutionConfig)


def get_state(ctx: typer.Context) -> LabState:
    root = ctx.find_root()
    if not isinstance(root.obj, LabState):
        root.obj = LabState()
    return root.obj


def use_color(enabled: bool) -> None:
    """Turn styling of the shared console on or off."""
    console.no_color = not enabled


def fail(message: str, code: int = 1) -> None:
    console.print(f"[red]Error:[/red] {message}")
    raise typer.Exit(code)


def read_json(path: Path) -> dict[str, Any]:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        fail(f"file not found: {path}")
    except json.JSONDecodeError as e:
        fail(f"{path} is not valid JSON: {e}")


def read_params(path: Path | None, **overrides: float | None) -> ExponentParams:
    """Params file (if any) with explicit flag values layered on top."""
    data = read_json(path) if path else {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExponentParams(**data)
    except ValidationError as e:
        fail(_validation_message(e))


def read_rooms(path: Path | None, **overrides: Any) -> RoomsSpec:
    data = read_json(path) if path else {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RoomsSpec(**data)
    except ValidationError as e:
        fail(_validation_message(e))


def parse_floats(text: str | None, count: int, name: str) -> list[float] | None:
    """Comma-separated numbers such as "0.5,0.25"."""
    if text is None:
        return None
    try:
        values = [float(t) for t in text.split(",")]
    except ValueError:
        fail(f"{name} must be {count} comma-separated numbers, got '{text}'")
    if len(values) != count:
        fail(f"{name} must be {count} comma-separated numbers, got '{text}'")
    return values


def _validation_message(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "invalid input; " + "; ".join(parts)


def build_config(ctx: typer.Context, command: str, **fields: Any) -> ExperimentConfig:
    state = get_state(ctx)
    resolution = fields.pop("resolution", None) or {}
    data = {
        "command": command,
        "seed": state.seed,
        "threads": state.threads,
        "out_dir": state.out_dir,
        "expect": state.expect,
        "resolution": {
            **state.resolution.model_dump(),
            **{k: v for k, v in resolution.items() if v is not None},
        },
        **{k: v for k, v in fields.items() if v is not None},
    }
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        fail(_validation_message(e))


def _print_table(report: RunReport) -> None:
    table = Table(title=report.command, show_header=True, header_style="bold cyan")
    table.add_column("Key", style="bold")
    table.add_column("Value")
    for key, value in report.results.items():
        if isinstance(value, (int, float, str, bool)):
            shown = f"{value:.6g}" if isinstance(value, float) else str(value)
            table.add_row(key, shown)
        elif isinstance(value, dict) and all(
            isinstance(v, (int, float, str, bool)) for v in value.values()
        ):
            for sub, v in value.items():
                table.add_row(f"{key}.{sub}", f"{v:.6g}" if isinstance(v, float) else str(v))
    for key, value in report.verdicts.items():
        color = {"holds": "green", "consistent-holds": "green", "fails": "red"}.get(value, "yellow")
        table.add_row(f"verdict.{key}", f"[{color}]{value}[/{color}]")
    console.print(table)


def execute(
    ctx: typer.Context, config: ExperimentConfig, write: bool = True, output: str | None = None
) -> RunReport:
    """Run, print and translate the outcome into the exit code (0, 1 or 2)."""
    try:
        report, outcome = run(config, write=write)
    except ValidationError as e:
        fail(_validation_message(e))
    except KornlabError as e:
        fail(str(e))
    except (KeyError, TypeError, ValueError) as e:
        fail(f"invalid option: {e}")

    fmt = output or get_state(ctx).output
    if fmt == "json":
        payload = {"results": report.results, "verdicts": report.verdicts}
        console.print_json(dumps(payload))
    else:
        _print_table(report)
        if write:
            console.print(f"[dim]Report written to {Path(config.out_dir) / 'report.json'}[/dim]")

    if not expectation_met(config.expect, outcome.primary):
        console.print(
            f"[yellow]Expected {config.expect}, got {outcome.primary.value}[/yellow]"
        )
        raise typer.Exit(2)
    return report
