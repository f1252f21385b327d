import logging
from enum import Enum
from pathlib import Path
from typing import Annotated

import numpy as np
import typer
from rich.console import Console
from rich.table import Table

from statespace.cli.deps import cli_errors, get_config, parse_dims, read_payload, write_csv, write_json
from statespace.core.errors import DimMismatch, VerificationFailed
from statespace.core.seeding import make_rng
from statespace.models import HomotopyGrid, LatticeSpec
from statespace.schemas.payloads import GridPayload, PathPayload
from statespace.schemas.reports import VerificationReport
from statespace.services import homotopy, sampling

logger = logging.getLogger(__name__)
console = Console()

LoopFile = Annotated[Path, typer.Argument(exists=True, dir_okay=False, help="Loop JSON (params, states)")]


class LoopKind(str, Enum):
    RANDOM = "random"
    GREAT_CIRCLE = "great-circle"
    CONSTANT = "constant"


def _deviation_rows(grid: HomotopyGrid):
    cells = homotopy.cell_deviations(grid)
    base = np.zeros((grid.dim, grid.dim), dtype=complex)
    base[0, 0] = 1.0
    distance = np.linalg.norm(grid.states - base, axis=(-2, -1))
    for i, t in enumerate(grid.t_params):
        for j, s in enumerate(grid.s_params):
            yield i, j, float(t), float(s), float(cells[i, j]), float(distance[i, j])


DEVIATION_HEADER = ("t_index", "s_index", "t", "s", "lift_consistency", "basepoint_distance")


def _summary(title: str, report: VerificationReport) -> None:
    table = Table(title=title)
    table.add_column("check")
    table.add_column("value", justify="right")
    for name in (
        "s0_deviation",
        "lift_identity_deviation",
        "lift_consistency",
        "boundary_deviation",
        "final_deviation",
        "continuity_modulus",
    ):
        table.add_row(name, f"{getattr(report, name):.3e}")
    table.add_row("passed", str(report.passed))
    console.print(table)


def _write_homotopy(ctx: typer.Context, grid: HomotopyGrid, report: VerificationReport) -> None:
    config = get_config(ctx)
    write_json(config, "grid.json", GridPayload.from_grid(grid))
    write_json(config, "report.json", report)
    write_csv(config, "deviations.csv", DEVIATION_HEADER, _deviation_rows(grid))
    if not report.passed:
        raise VerificationFailed(
            "homotopy failed verification",
            worst_cell=report.worst_cell,
            lift_consistency=report.lift_consistency,
            final_deviation=report.final_deviation,
        )


@cli_errors
def contract(
    ctx: typer.Context,
    loop_file: LoopFile,
    verify_tol: Annotated[float, typer.Option(help="Tolerance of the verification report")] = 1e-6,
):
    """Contract a loop in S(M_n) based at |e0⟩⟨e0| and verify the homotopy."""
    loop = read_payload(loop_file, PathPayload).to_path()
    grid = homotopy.contract_loop_matrix(loop)
    report = homotopy.verify_homotopy(grid, tol=verify_tol, input_path=loop)
    _summary("contract", report)
    _write_homotopy(ctx, grid, report)


@cli_errors
def disentangle(
    ctx: typer.Context,
    loop_file: LoopFile,
    sites: Annotated[str | None, typer.Option(help="Site dimensions, e.g. 2,2,2 (default: from the loop file)")] = None,
    verify_tol: Annotated[float, typer.Option(help="Tolerance of the verification report")] = 1e-6,
):
    """Contract a loop on a lattice site by site, reporting factorization residuals."""
    payload = read_payload(loop_file, PathPayload)
    spec = LatticeSpec(site_dims=parse_dims(sites)) if sites else payload.lattice()
    if spec is None:
        raise DimMismatch("site dimensions are required (--sites or site_dims in the loop file)")
    loop = payload.to_path()
    grid, _, factorization = homotopy.disentangle_loop(loop, spec)
    report = homotopy.verify_homotopy(grid, tol=verify_tol, input_path=loop, spec=spec)
    write_json(get_config(ctx), "factorization.json", factorization)
    _summary("disentangle", report)
    typer.echo(f"max factorization residual: {factorization.max_residual:.3e}")
    _write_homotopy(ctx, grid, report)


@cli_errors
def loop(
    ctx: typer.Context,
    kind: Annotated[LoopKind, typer.Option(help="Loop family")] = LoopKind.RANDOM,
    sites: Annotated[str, typer.Option(help="Site dimensions, e.g. 2,2,2")] = "2",
    samples: Annotated[int, typer.Option(min=2, help="Number of samples")] = 100,
    index: Annotated[int, typer.Option(min=0, help="Stream index under the run seed")] = 0,
    output: Annotated[str, typer.Option(help="File name inside --out")] = "loop.json",
):
    """Write a based loop fixture (seeded random, great circle or constant)."""
    config = get_config(ctx)
    spec = LatticeSpec(site_dims=parse_dims(sites))
    if kind is LoopKind.RANDOM:
        path = sampling.random_loop(spec.total_dim, samples, make_rng(config.seed, index))
    elif kind is LoopKind.GREAT_CIRCLE:
        path = sampling.great_circle_loop(samples, spec.total_dim)
    else:
        path = sampling.constant_loop(spec.total_dim, samples)
    written = write_json(config, output, PathPayload.from_path(path, spec))
    logger.info(
        "Wrote loop fixture",
        extra={"extra_info": {"event": "LOOP_FIXTURE", "kind": kind.value, "site_dims": list(spec.site_dims)}},
    )
    typer.echo(str(written))
