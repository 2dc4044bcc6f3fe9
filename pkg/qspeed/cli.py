# qspeed/cli.py
"""
Main CLI interface for qspeed
"""

import logging
import sys
from pathlib import Path
from typing import NoReturn, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .config.manager import ConfigManager
from .config.presets import preset_names
from .core.pipeline import SWEEP_KINDS, run_trajectory, run_virtual_experiment, sweep_n
from .errors import ConfigError, NumericalInvariantError

EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def _configure_logging(verbose: bool, debug: bool) -> None:
    logger = logging.getLogger("qspeed")
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(console=Console(stderr=True), show_path=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.propagate = False
    if debug:
        logger.setLevel(logging.DEBUG)
    elif verbose:
        logger.setLevel(logging.INFO)
    else:
        logger.setLevel(logging.WARNING)


def _exit_for(error: Exception) -> NoReturn:
    """Report an error and exit with its code"""
    if isinstance(error, ConfigError):
        click.echo(f"Configuration error: {error}", err=True)
        sys.exit(EXIT_CONFIG)
    if isinstance(error, NumericalInvariantError):
        click.echo(f"Numerical invariant violated: {error}", err=True)
        sys.exit(EXIT_INVARIANT)
    click.echo(f"Error: {error}", err=True)
    sys.exit(EXIT_FAILURE)


def _load(config_file: Path, output_dir: Optional[Path]):
    cfg = ConfigManager(config_file).load()
    if output_dir is not None:
        cfg.values["output_dir"] = str(output_dir)
    return cfg


@click.group()
@click.version_option(version=__version__, prog_name="qspeed")
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose output")
@click.option("--debug", is_flag=True, help="Enable debug mode")
@click.option("--workers", "-j", type=int, default=None, help="Worker threads (default: config)")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, debug: bool, workers: Optional[int]):
    """qspeed: quantum speed limits of observables under photonic dephasing"""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["debug"] = debug
    ctx.obj["workers"] = workers
    _configure_logging(verbose, debug)

    if debug:
        click.echo("Debug mode enabled", err=True)


@cli.command()
@click.argument("preset", type=click.Choice(preset_names()))
@click.option("--output", "-o", type=click.Path(path_type=Path), help="Scenario file to write")
@click.option("--force", "-f", is_flag=True, help="Overwrite an existing scenario file")
@click.pass_context
def init(ctx: click.Context, preset: str, output: Optional[Path], force: bool):
    """Write an annotated scenario file for one of the presets"""
    target = output or Path(f"{preset}.yaml")
    if target.exists() and not force:
        click.echo(f"{target} already exists.")
        click.echo("Use --force to overwrite.")
        return

    try:
        ConfigManager().initialize_scenario(preset, target, force=force)
    except Exception as e:
        _exit_for(e)
    click.echo(f"✓ Created scenario file: {target}")
    click.echo()
    click.echo("Next steps:")
    click.echo(f"   qspeed trajectory {target}")
    click.echo(f"   qspeed experiment {target}")


@cli.command()
@click.argument("config_file", type=click.Path(path_type=Path))
@click.pass_context
def validate(ctx: click.Context, config_file: Path):
    """Check a scenario file and print the resolved configuration"""
    try:
        values = ConfigManager(config_file).get_all_config()
    except Exception as e:
        _exit_for(e)
    click.echo(f"✓ {config_file} is valid")
    for key, value in values.items():
        click.echo(f"  {key} = {value}")


@cli.command()
@click.argument("config_file", type=click.Path(path_type=Path))
@click.option("--output-dir", "-o", type=click.Path(path_type=Path), help="Override output_dir")
@click.pass_context
def trajectory(ctx: click.Context, config_file: Path, output_dir: Optional[Path]):
    """Compute speeds and speed limits over the scenario grid"""
    try:
        cfg = _load(config_file, output_dir)
        result = run_trajectory(cfg, workers=ctx.obj.get("workers"))
    except Exception as e:
        _exit_for(e)
    summary = result.summary
    click.echo(
        f"✓ {cfg.name}: max speed {summary['max_speed']:.10g} at l = {summary['l_star']:.6g}"
    )
    click.echo(f"  max upper bound {summary['max_upper_bound']:.10g}")
    for path in result.paths:
        click.echo(f"  wrote {path}")


@cli.command()
@click.argument("config_file", type=click.Path(path_type=Path))
@click.option("--output-dir", "-o", type=click.Path(path_type=Path), help="Override output_dir")
@click.pass_context
def experiment(ctx: click.Context, config_file: Path, output_dir: Optional[Path]):
    """Run the virtual tomography experiment next to the analytic curves"""
    try:
        cfg = _load(config_file, output_dir)
        result = run_virtual_experiment(cfg, workers=ctx.obj.get("workers"))
    except Exception as e:
        _exit_for(e)
    block = result.summary["experiment"]
    click.echo(
        f"✓ {cfg.name}: estimated max speed {block['max_speed_mean']:.4f}"
        f" ± {block['max_speed_std']:.4f} at l = {block['l_max']:.6g}"
    )
    if block["bound_outliers_3sigma"]:
        click.echo(f"  {block['bound_outliers_3sigma']} point(s) outside the bounds by > 3σ")
    for path in result.paths:
        click.echo(f"  wrote {path}")


@cli.command("sweep-n")
@click.option("--kind", type=click.Choice(SWEEP_KINDS), required=True, help="Product or GHZ")
@click.option("--n-max", type=int, required=True, help="Largest photon number")
@click.option(
    "--source",
    type=click.Choice(["monochromatic", "decorrelated"]),
    default="monochromatic",
    show_default=True,
)
@click.option("--output-dir", "-o", type=click.Path(path_type=Path), help="Output directory")
@click.pass_context
def sweep_n_command(
    ctx: click.Context, kind: str, n_max: int, source: str, output_dir: Optional[Path]
):
    """Maximum speed and speed limit against the photon number"""
    try:
        target = output_dir or Path(ConfigManager().load().output_dir)
        rows = sweep_n(kind, n_max, source, target, workers=ctx.obj.get("workers") or 1)
    except Exception as e:
        _exit_for(e)

    table = Table(title=f"{kind} states, {source} source")
    for column in ("N", "expected bound", "max bound", "max speed", "l*"):
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(
            str(row["n"]),
            f"{row['expected_bound']:.10g}",
            f"{row['max_bound']:.10g}",
            f"{row['max_speed']:.10g}",
            f"{row['l_max_speed']:.6g}",
        )
    Console().print(table)
    click.echo(f"✓ wrote sweep_{kind}.csv and sweep_{kind}_curves.csv to {target}")


def main():
    """Main entry point for the CLI"""
    try:
        cli(obj={})
    except KeyboardInterrupt:
        click.echo("\n⚠️  Operation cancelled by user", err=True)
        sys.exit(EXIT_FAILURE)
    except Exception as e:
        click.echo(f"❌ Unexpected error: {e}", err=True)
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    main()
