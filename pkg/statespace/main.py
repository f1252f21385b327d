"""Command-line entry point.

Global options come before the command::

    python -m statespace --seed 7 --out out --tol.delta_p=1e-5 contract loop.json
"""

import json
import logging
from pathlib import Path
from typing import Annotated

import click
import typer
from typer.core import TyperGroup

from statespace.cli import register_commands
from statespace.cli.deps import cli_errors
from statespace.core.config import apply_overrides, restore, settings
from statespace.core.logging_config import configure_logging
from statespace.schemas.payloads import CSV_SCHEMAS
from statespace.schemas.run_config import RunConfig

logger = logging.getLogger("statespace")


def normalize_argv(args: list[str]) -> list[str]:
    """Rewrite ``--tol.<name>=<value>`` (or ``--tol.<name> <value>``) as ``--tol <name>=<value>``."""
    out: list[str] = []
    items = iter(args)
    for arg in items:
        if arg.startswith("--tol.") and len(arg) > len("--tol."):
            name, sep, value = arg[len("--tol.") :].partition("=")
            if not sep:
                value = next(items, "")
            out.extend(["--tol", f"{name}={value}"])
        else:
            out.append(arg)
    return out


class StateSpaceGroup(TyperGroup):
    def parse_args(self, ctx: click.Context, args: list[str]) -> list[str]:
        return super().parse_args(ctx, normalize_argv(args))


def _print_schema(value: bool) -> None:
    if value:
        typer.echo(json.dumps(CSV_SCHEMAS, indent=2, ensure_ascii=False))
        raise typer.Exit()


app = typer.Typer(
    cls=StateSpaceGroup,
    name=settings.PROJECT_NAME,
    help=settings.PROJECT_DESCRIPTION,
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)


@app.callback()
@cli_errors
def main(
    ctx: typer.Context,
    seed: Annotated[int, typer.Option(min=0, help="64-bit seed of every random stream")] = settings.SEED,
    out: Annotated[Path, typer.Option(file_okay=False, help="Artifact directory")] = Path("out"),
    tol: Annotated[
        list[str] | None, typer.Option("--tol", help="Override a tolerance, name=value (also --tol.name=value)")
    ] = None,
    cap: Annotated[int | None, typer.Option("--cap", help="Size cap on total Hilbert dimension")] = None,
    schema: Annotated[
        bool, typer.Option("--schema", is_eager=True, callback=_print_schema, help="Print the CSV column schemas")
    ] = False,
):
    configure_logging()
    config = RunConfig(seed=seed, out=out, tolerances=RunConfig.parse_tolerances(tol or []), size_cap=cap)
    previous = apply_overrides(config.overrides())
    ctx.call_on_close(lambda: restore(previous))
    ctx.obj = config
    log_context = {"event": "RUN", "command": ctx.invoked_subcommand, **config.model_dump(mode="json")}
    logger.debug("Run configured", extra={"extra_info": log_context})


register_commands(app)


def run() -> None:
    app()


if __name__ == "__main__":
    run()
