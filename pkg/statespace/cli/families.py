import logging
from enum import Enum
from pathlib import Path
from typing import Annotated

import numpy as np
import typer
from rich.console import Console
from rich.table import Table

from statespace.cli.deps import cli_errors, get_config, read_payload, write_csv, write_json
from statespace.schemas.payloads import BundlePayload, MatrixPayload
from statespace.schemas.reports import FlattenReport
from statespace.services import families, sampling
from statespace.services.linalg import herm_eig

logger = logging.getLogger(__name__)
console = Console()

PUMP_HEADER = ("w_index", "t_index", "w1", "w2", "w3", "t", "ground_energy", "gap", "continuity")


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


@cli_errors
def pump(
    ctx: typer.Context,
    length: Annotated[int, typer.Option("--L", "--length", help="Even chain length")] = 4,
    n_w: Annotated[int, typer.Option(min=1, help="Number of S² points (Fibonacci lattice)")] = 6,
    n_t: Annotated[int, typer.Option(min=2, help="Number of t samples in [-1, 1]")] = 21,
    boundary: Annotated[Boundary, typer.Option(help="Chain boundary")] = Boundary.PERIODIC,
):
    """Sweep the pump family over S² × [-1, 1], writing gaps and continuity."""
    config = get_config(ctx)
    ws = sampling.fibonacci_sphere(n_w)
    ts = np.linspace(-1.0, 1.0, n_t).tolist()
    _, report = families.pump_family(ws, ts, length, boundary=boundary.value)
    rows = (
        (p.w_index, p.t_index, *p.w, p.t, p.ground_energy, p.gap, p.continuity_to_previous)
        for p in report.points
    )
    write_csv(config, "pump.csv", PUMP_HEADER, rows)
    write_json(config, "pump_report.json", report)
    typer.echo(f"min gap: {report.min_gap:.6f}")
    typer.echo(f"continuity modulus: {report.continuity_modulus:.3e}")
    typer.echo(f"pole deviation: {report.pole_deviation:.3e}")


@cli_errors
def berry(
    ctx: typer.Context,
    n_theta: Annotated[int, typer.Option(min=1, help="θ intervals over [0, π]")] = 24,
    n_phi: Annotated[int, typer.Option(min=3, help="φ samples over [0, 2π)")] = 24,
    band: Annotated[int, typer.Option(min=0, max=1, help="0 for the ground band")] = 0,
):
    """Write the spectral projector bundle of w·σ over an S² grid."""
    bundle = families.berry_bundle(n_theta, n_phi, band)
    path = write_json(get_config(ctx), "bundle.json", BundlePayload.from_bundle(bundle))
    typer.echo(str(path))


@cli_errors
def chern(
    ctx: typer.Context,
    bundle_file: Annotated[
        Path | None, typer.Argument(exists=True, dir_okay=False, help="Bundle JSON (default: the Berry bundle)")
    ] = None,
    n_theta: Annotated[int, typer.Option(min=1)] = 24,
    n_phi: Annotated[int, typer.Option(min=3)] = 24,
):
    """Chern number of a projector bundle from plaquette fluxes."""
    if bundle_file is None:
        bundle = families.berry_bundle(n_theta, n_phi)
    else:
        bundle = read_payload(bundle_file, BundlePayload).to_bundle()
    result = families.chern_number(bundle)
    write_json(get_config(ctx), "chern.json", result)
    typer.echo(f"C = {result.value}")
    typer.echo(f"residual = {result.residual:.3e}")


@cli_errors
def flatten(
    ctx: typer.Context,
    matrix_file: Annotated[Path, typer.Argument(exists=True, dir_okay=False, help="Hermitian matrix JSON")],
    t: Annotated[float, typer.Option(help="Flattening parameter in [0, 1]")] = 1.0,
):
    """Apply x ↦ x/|x|^t to a gapped Hermitian matrix and report its index."""
    a = read_payload(matrix_file, MatrixPayload).to_array()
    before = herm_eig(a).values
    after = herm_eig(families.flatten(a, t)).values
    report = FlattenReport(
        t=t,
        spectrum_before=before.tolist(),
        spectrum_after=after.tolist(),
        index=families.neg_index(a),
    )
    write_json(get_config(ctx), "flatten.json", report)

    table = Table(title=f"flatten t={t}")
    table.add_column("before", justify="right")
    table.add_column("after", justify="right")
    for x, y in zip(report.spectrum_before, report.spectrum_after):
        table.add_row(f"{x:.6f}", f"{y:.6f}")
    console.print(table)
    typer.echo(f"k = {report.index}")
