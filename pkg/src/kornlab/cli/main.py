"""Main CLI entry point for kornlab."""

from __future__ import annotations

import logging
from pathlib import Path

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from kornlab import __version__
from kornlab.cli.common import LabState, console, execute, fail, read_params, use_color
from kornlab.cli.config import app as config_app
from kornlab.cli.constants import app as constants_app
from kornlab.cli.divsolve import app as divsolve_app
from kornlab.cli.fields import app as fields_app
from kornlab.cli.gallery import app as gallery_app
from kornlab.cli.geom import app as geom_app
from kornlab.cli.qhyp import app as qhyp_app
from kornlab.cli.scaling import app as scaling_app
from kornlab.cli.runner import run
from kornlab.config import ExperimentConfig, load_config, load_experiment
from kornlab.report import dumps

# Create main app
app = typer.Typer(
    name="kornlab",
    help="Numerical lab for weighted Korn and Poincaré inequalities",
    no_args_is_help=True,
    rich_markup_mode="rich",
)

# Add subcommands
app.add_typer(config_app, name="config", help="Manage configuration")
app.add_typer(geom_app, name="geom", help="Rectilinear domains and Whitney decompositions")
app.add_typer(qhyp_app, name="qhyp", help="Quasihyperbolic distance and domain classifiers")
app.add_typer(gallery_app, name="gallery", help="Domain generators")
app.add_typer(fields_app, name="fields", help="Grid fields and the room test fields")
app.add_typer(scaling_app, name="scaling", help="Exponent predictions and slope measurements")
app.add_typer(divsolve_app, name="divsolve", help="Weighted divergence equation")
app.add_typer(constants_app, name="constants", help="Best-constant estimates and blow-up")


def _setup_logging(verbose: bool, color: bool = True) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True, no_color=not color), show_path=False)],
        force=True,
    )


@app.command()
def version():
    """Show version information."""
    console.print(f"[bold green]kornlab[/bold green] v{__version__}")


@app.command()
def verdict(
    params_file: Path | None = typer.Option(None, "--params", help="Exponent params JSON file"),
    p: float | None = typer.Option(None, "--p", help="Integrability exponent p"),
    q: float | None = typer.Option(None, "--q", help="Exponent q"),
    a: float | None = typer.Option(None, "--a", help="Weight exponent a"),
    b: float | None = typer.Option(None, "--b", help="Weight exponent b"),
    s: float | None = typer.Option(None, "--s", help="s-John exponent"),
    beta: float | None = typer.Option(None, "--beta", help="QHBC exponent β"),
    sigma: float | None = typer.Option(None, "--sigma", help="Corridor width exponent σ"),
    tau: float | None = typer.Option(None, "--tau", help="Corridor length exponent τ"),
    output: str | None = typer.Option(None, "--output", "-o", help="Output format: table or json"),
):
    """Evaluate every threshold predicate for one set of exponents."""
    params = read_params(params_file, p=p, q=q, a=a, b=b, s=s, beta=beta, sigma=sigma, tau=tau)
    _, outcome = run(ExperimentConfig(command="scaling predict", params=params), write=False)
    fmt = output or load_config().cli.output_format
    if fmt == "json":
        console.print_json(dumps({"verdicts": outcome.verdicts, **outcome.results}))
        return
    table = Table(title="Threshold predicates", show_header=True, header_style="bold cyan")
    table.add_column("Predicate", style="bold")
    table.add_column("Verdict")
    for name, value in outcome.verdicts.items():
        table.add_row(name, value)
    cond = outcome.results["exponent_condition_qhbc"]
    table.add_row("exponent_condition_qhbc", f"{cond['satisfied']} ({cond['value']:.6g})")
    console.print(table)


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    seed: int | None = typer.Option(None, "--seed", help="Random seed recorded in reports"),
    threads: int | None = typer.Option(None, "--threads", help="Worker cap"),
    out_dir: Path | None = typer.Option(None, "--out-dir", help="Directory for reports"),
    expect: str | None = typer.Option(
        None, "--expect", help="Expected verdict (holds or fails); a mismatch exits with 2"
    ),
    config: Path | None = typer.Option(None, "--config", help="Run an experiment JSON file"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    output: str | None = typer.Option(None, "--output", "-o", help="Output format: table or json"),
):
    """kornlab - weighted Korn and Poincaré inequalities on rectilinear domains."""
    try:
        lab = load_config()
    except (ValidationError, ValueError) as e:
        fail(f"invalid configuration file: {e}")
    use_color(lab.cli.color)
    _setup_logging(verbose, lab.cli.color)
    if expect is not None and expect not in ("holds", "fails"):
        fail("--expect must be 'holds' or 'fails'")
    ctx.obj = LabState(
        seed=seed if seed is not None else lab.run.seed,
        threads=threads if threads is not None else lab.run.threads,
        out_dir=str(out_dir) if out_dir is not None else lab.run.out_dir,
        expect=expect,
        output=output or lab.cli.output_format,
        resolution=lab.resolution,
    )
    if config is None:
        return
    if ctx.invoked_subcommand is not None:
        fail("--config runs a whole experiment and takes no subcommand")
    try:
        experiment = load_experiment(config)
    except FileNotFoundError:
        fail(f"file not found: {config}")
    except ValidationError as e:
        fail(f"invalid experiment file {config}: {e}")
    updates = {
        k: v
        for k, v in {
            "seed": seed,
            "threads": threads,
            "out_dir": str(out_dir) if out_dir is not None else None,
            "expect": expect,
        }.items()
        if v is not None
    }
    execute(ctx, experiment.model_copy(update=updates))
    raise typer.Exit()


if __name__ == "__main__":
    app()
