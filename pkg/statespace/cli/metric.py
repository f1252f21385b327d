from pathlib import Path
from typing import Annotated

import typer

from statespace.cli.deps import cli_errors, get_config, parse_dims, read_payload, write_json
from statespace.core.config import settings
from statespace.models import DensityMatrix, LatticeSpec
from statespace.schemas.payloads import MatrixPayload
from statespace.schemas.reports import MetricReport
from statespace.services import states

StateFile = Annotated[Path, typer.Argument(exists=True, dir_okay=False, help="Density matrix JSON")]


@cli_errors
def metric(
    ctx: typer.Context,
    rho_file: StateFile,
    sigma_file: StateFile,
    sites: Annotated[str | None, typer.Option(help="Site dimensions (default: one site)")] = None,
    k: Annotated[int | None, typer.Option("--K", min=1, help="Number of family members summed")] = None,
):
    """Truncated weak* distance between two states, with its tail bound."""
    rho = DensityMatrix(matrix=read_payload(rho_file, MatrixPayload).to_array())
    sigma = DensityMatrix(matrix=read_payload(sigma_file, MatrixPayload).to_array())
    spec = LatticeSpec(site_dims=parse_dims(sites)) if sites else LatticeSpec(site_dims=(rho.dim,))
    k = settings.METRIC_K if k is None else k
    fam = states.observable_family(spec, k)
    value, bound = states.weakstar_dist(rho, sigma, fam, k)
    report = MetricReport(
        value=value,
        tail_bound=bound,
        K=k,
        family_size=states.family_size(spec),
        site_dims=list(spec.site_dims),
    )
    write_json(get_config(ctx), "metric.json", report)
    typer.echo(f"d = {value:.12g} (tail ≤ {bound:.3e})")
