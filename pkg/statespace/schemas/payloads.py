"""JSON wire formats of the command surface.

Matrices are stored row-major as separate real and imaginary lists. Floats
are written with the shortest repr that parses back to the same double, so
serialize → parse → serialize is byte-identical.
"""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from statespace.core.errors import DimMismatch
from statespace.models import (
    GroundBundle,
    HomotopyGrid,
    LatticeSpec,
    PresentedMonoid,
    SampledPath,
    StageInfo,
)


class Payload(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="strings")


class MatrixPayload(Payload):
    rows: int = Field(..., ge=0)
    cols: int = Field(..., ge=0)
    re: list[float]
    im: list[float]

    @model_validator(mode="after")
    def check_length(self) -> "MatrixPayload":
        size = self.rows * self.cols
        if len(self.re) != size or len(self.im) != size:
            raise DimMismatch("re and im must hold rows*cols entries", rows=self.rows, cols=self.cols)
        return self

    @classmethod
    def from_array(cls, a) -> "MatrixPayload":
        m = np.asarray(a, dtype=complex)
        if m.ndim != 2:
            raise DimMismatch("a matrix payload needs a two-dimensional array", shape=list(m.shape))
        flat = m.ravel()
        return cls(rows=m.shape[0], cols=m.shape[1], re=np.real(flat).tolist(), im=np.imag(flat).tolist())

    def to_array(self) -> np.ndarray:
        out = np.array(self.re, dtype=float) + 1j * np.array(self.im, dtype=float)
        return out.reshape(self.rows, self.cols)


def _stack(payloads: list[MatrixPayload]) -> np.ndarray:
    return np.array([p.to_array() for p in payloads])


def _grid_stack(payloads: list[list[MatrixPayload]]) -> np.ndarray:
    return np.array([[p.to_array() for p in row] for row in payloads])


class PathPayload(Payload):
    params: list[float]
    states: list[MatrixPayload]
    loop: bool = True
    site_dims: list[int] | None = None

    @classmethod
    def from_path(cls, path: SampledPath, spec: LatticeSpec | None = None) -> "PathPayload":
        return cls(
            params=path.params.tolist(),
            states=[MatrixPayload.from_array(rho) for rho in path.states],
            loop=path.loop,
            site_dims=None if spec is None else list(spec.site_dims),
        )

    def to_path(self) -> SampledPath:
        return SampledPath(params=self.params, states=_stack(self.states), loop=self.loop)

    def lattice(self) -> LatticeSpec | None:
        return None if self.site_dims is None else LatticeSpec(site_dims=tuple(self.site_dims))


class StagePayload(Payload):
    label: str
    s_start: float
    s_end: float


class GridPayload(Payload):
    t_params: list[float]
    s_params: list[float]
    states: list[list[MatrixPayload]]
    lift: list[list[MatrixPayload]]
    final_column_exempt: bool = False
    stages: list[StagePayload] = []

    @classmethod
    def from_grid(cls, grid: HomotopyGrid) -> "GridPayload":
        return cls(
            t_params=grid.t_params.tolist(),
            s_params=grid.s_params.tolist(),
            states=[[MatrixPayload.from_array(m) for m in row] for row in grid.states],
            lift=[[MatrixPayload.from_array(m) for m in row] for row in grid.lift],
            final_column_exempt=grid.final_column_exempt,
            stages=[StagePayload(**s.model_dump()) for s in grid.stages],
        )

    def to_grid(self) -> HomotopyGrid:
        return HomotopyGrid(
            t_params=self.t_params,
            s_params=self.s_params,
            states=_grid_stack(self.states),
            lift=_grid_stack(self.lift),
            final_column_exempt=self.final_column_exempt,
            stages=tuple(StageInfo(**s.model_dump()) for s in self.stages),
        )


class BundlePayload(Payload):
    band: int = 0
    thetas: list[float]
    phis: list[float]
    projectors: list[list[MatrixPayload]]

    @classmethod
    def from_bundle(cls, bundle: GroundBundle) -> "BundlePayload":
        return cls(
            band=bundle.band,
            thetas=bundle.thetas.tolist(),
            phis=bundle.phis.tolist(),
            projectors=[[MatrixPayload.from_array(p) for p in row] for row in bundle.projectors],
        )

    def to_bundle(self) -> GroundBundle:
        return GroundBundle(
            thetas=self.thetas,
            phis=self.phis,
            projectors=_grid_stack(self.projectors),
            band=self.band,
        )


class MonoidPayload(Payload):
    n_gens: int
    relations: list[tuple[list[int], list[int]]] = []

    def to_monoid(self) -> PresentedMonoid:
        return PresentedMonoid(
            n_gens=self.n_gens,
            relations=tuple((tuple(u), tuple(v)) for u, v in self.relations),
        )


class ErrorPayload(Payload):
    error: str
    detail: str
    exit_code: int
    context: dict[str, Any] = {}


# Column documentation printed by --schema.
CSV_SCHEMAS: dict[str, dict[str, str]] = {
    "deviations.csv": {
        "t_index": "row of the grid",
        "s_index": "column of the grid",
        "t": "loop parameter",
        "s": "homotopy parameter",
        "lift_consistency": "‖H(t,s) − A_{t,s}·H(t,0)‖_F",
        "basepoint_distance": "‖H(t,s) − |e0⟩⟨e0|‖_F",
    },
    "pump.csv": {
        "w_index": "index of the S² point",
        "t_index": "index of the t sample",
        "w1": "first component of w",
        "w2": "second component of w",
        "w3": "third component of w",
        "t": "pump parameter in [-1, 1]",
        "ground_energy": "lowest eigenvalue",
        "gap": "E1 − E0",
        "continuity": "weak* distance to the previous t sample (empty at t_index 0)",
    },
}
