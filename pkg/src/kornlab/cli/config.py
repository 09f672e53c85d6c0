"""Config CLI commands."""

from __future__ import annotations

import typer
from pydantic import ValidationError
from rich.panel import Panel

from kornlab.cli.common import console
from kornlab.config import LabConfig, get_config_path, load_config, save_config

app = typer.Typer(help="Manage kornlab configuration")

KEYS = (
    "run.seed",
    "run.threads",
    "run.out_dir",
    "resolution.min_level",
    "resolution.h",
    "resolution.cells_across",
    "cli.output_format",
    "cli.color",
)


def _coerce(key: str, value: str) -> object:
    if key == "cli.color":
        return value.lower() in ("true", "1", "yes")
    if key == "cli.output_format" and value not in ("table", "json"):
        console.print("[red]output_format must be 'table' or 'json'[/red]")
        raise typer.Exit(1)
    return value


@app.command("init")
def init_config(
    force: bool = typer.Option(False, "--force", "-f", help="Overwrite an existing config file"),
):
    """Write a config file holding the defaults."""
    config_path = get_config_path()
    if config_path.exists() and not force:
        console.print(f"[yellow]Config already exists at {config_path}; use --force.[/yellow]")
        raise typer.Exit()
    save_config(LabConfig())
    console.print(f"[green]✓[/green] Config saved to [cyan]{config_path}[/cyan]")
    console.print("\nChange a value: [bold]kornlab config set resolution.h 0.0078125[/bold]")


@app.command("show")
def show_config():
    """Show current configuration."""
    config = load_config()
    config_path = get_config_path()

    content = f"""[bold]Run:[/bold]
  Seed:    {config.run.seed}
  Threads: {config.run.threads}
  Out dir: {config.run.out_dir}

[bold]Resolution:[/bold]
  Min level:    {config.resolution.min_level}
  h:            {config.resolution.h}
  Cells across: {config.resolution.cells_across}

[bold]CLI:[/bold]
  Output Format: {config.cli.output_format}
  Color:         {config.cli.color}"""

    console.print(Panel(content, title=f"[bold]Config[/bold] ({config_path})", expand=False))


@app.command("set")
def set_config(
    key: str = typer.Argument(..., help="Config key (e.g., run.seed, resolution.h)"),
    value: str = typer.Argument(..., help="Value to set"),
):
    """Set a configuration value."""
    key = key.lower()
    if key not in KEYS:
        console.print(f"[red]Unknown key: {key}[/red]")
        console.print(f"[dim]Available keys: {', '.join(KEYS)}[/dim]")
        raise typer.Exit(1)

    section, name = key.split(".")
    data = load_config().model_dump()
    data[section][name] = _coerce(key, value)
    try:
        config = LabConfig(**data)
    except ValidationError as e:
        console.print(f"[red]Invalid value for {key}: {e.errors()[0]['msg']}[/red]")
        raise typer.Exit(1) from None

    save_config(config)
    console.print(f"[green]✓[/green] Set [cyan]{key}[/cyan]")


@app.command("get")
def get_config(
    key: str = typer.Argument(..., help="Config key to get"),
):
    """Get a configuration value."""
    key = key.lower()
    if key not in KEYS:
        console.print(f"[red]Unknown key: {key}[/red]")
        raise typer.Exit(1)

    section, name = key.split(".")
    console.print(str(getattr(getattr(load_config(), section), name)))
