from pathlib import Path
from typing import Annotated

import typer

from statespace.cli.deps import cli_errors, get_config, parse_dims, read_payload, write_json
from statespace.schemas.payloads import MonoidPayload
from statespace.schemas.reports import K0Report
from statespace.services import phases


@cli_errors
def k0(
    ctx: typer.Context,
    monoid_file: Annotated[Path, typer.Argument(exists=True, dir_okay=False, help="Monoid JSON (n_gens, relations)")],
    localize: Annotated[str | None, typer.Option(help="Invert this element first, e.g. 1,0")] = None,
    bound: Annotated[int | None, typer.Option(min=0, help="Rewriting bound of the group test")] = None,
):
    """Group completion of a finitely presented commutative monoid."""
    monoid = read_payload(monoid_file, MonoidPayload).to_monoid()
    element = None
    if localize is not None:
        element = list(parse_dims(localize))
        monoid = phases.localize(monoid, element)
    group = phases.k0(monoid)
    report = K0Report(
        group=str(group),
        free_rank=group.free_rank,
        torsion=list(group.torsion),
        localized_at=element,
        is_group=phases.is_group(monoid, bound),
    )
    write_json(get_config(ctx), "k0.json", report)
    typer.echo(report.group)
