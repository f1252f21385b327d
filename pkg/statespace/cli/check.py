from typing import Annotated

import typer
from rich.console import Console
from rich.table import Table

from statespace.cli.deps import cli_errors, get_config, write_json
from statespace.core.errors import InvalidState, VerificationFailed
from statespace.schemas.reports import CheckReport
from statespace.tasks.suite import PROPERTIES, run_suite

console = Console()


@cli_errors
def check(
    ctx: typer.Context,
    full: Annotated[bool, typer.Option("--full", help="Use the acceptance instance counts")] = False,
    only: Annotated[list[str] | None, typer.Option("--only", help="Run only these properties (repeatable)")] = None,
):
    """Run the seeded property suite and print a pass/fail table."""
    config = get_config(ctx)
    unknown = sorted(set(only or ()) - set(PROPERTIES))
    if unknown:
        raise InvalidState("unknown properties", unknown=unknown, known=list(PROPERTIES))
    results = run_suite(config.seed, full=full, names=only)
    report = CheckReport(seed=config.seed, full=full, passed=all(r.passed for r in results), results=results)
    write_json(config, "check.json", report)

    table = Table(title=f"property suite (seed {config.seed})")
    table.add_column("property")
    table.add_column("result")
    table.add_column("seconds", justify="right")
    table.add_column("detail")
    for r in results:
        table.add_row(r.name, "[green]pass[/green]" if r.passed else "[red]FAIL[/red]", f"{r.seconds:.2f}", r.detail)
    console.print(table)
    if not report.passed:
        raise VerificationFailed("property suite failed", failed=[r.name for r in results if not r.passed])
