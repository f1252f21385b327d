from typing import Literal

import numpy as np
from pydantic import field_validator, model_validator

from statespace.core.config import settings
from statespace.core.errors import InvalidState, NotUnit, SizeCap
from statespace.models.base import FrozenModel, readonly


def unit_vector(w) -> np.ndarray:
    v = np.asarray(w, dtype=float).reshape(-1)
    if v.size != 3 or abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
        raise NotUnit("w must be a unit 3-vector", norm=float(np.linalg.norm(v)))
    return v


class PumpParams(FrozenModel):
    w: tuple[float, float, float]
    t: float
    L: int
    # An open chain leaves both end spins unpaired at t = -1.
    boundary: Literal["open", "periodic"] = "periodic"

    @field_validator("w", mode="before")
    @classmethod
    def check_w(cls, value) -> tuple[float, float, float]:
        return tuple(float(x) for x in unit_vector(value))

    @field_validator("t")
    @classmethod
    def check_t(cls, value: float) -> float:
        if not -1.0 <= value <= 1.0:
            raise InvalidState("t must lie in [-1, 1]", t=value)
        return value

    @field_validator("L")
    @classmethod
    def check_length(cls, value: int) -> int:
        if value < 2 or value % 2:
            raise InvalidState("L must be even and at least 2", L=value)
        if 2**value > settings.SIZE_CAP:
            raise SizeCap("chain exceeds the size cap", L=value, cap=settings.SIZE_CAP)
        return value


class GroundBundle(FrozenModel):
    """Rank-1 spectral projectors over a (θ, φ) grid of S².

    ``projectors`` has shape (n_theta + 1, n_phi, d, d) with θ from 0 to π
    inclusive and φ periodic. ``frames`` optionally fixes a unit vector in
    each fibre; without it frames are derived from the projectors.
    """

    thetas: np.ndarray
    phis: np.ndarray
    projectors: np.ndarray
    frames: np.ndarray | None = None
    band: int = 0

    @field_validator("thetas", "phis", mode="before")
    @classmethod
    def freeze_axis(cls, value) -> np.ndarray:
        return readonly(value, dtype=float)

    @field_validator("projectors", mode="before")
    @classmethod
    def check_projectors(cls, value) -> np.ndarray:
        p = readonly(value)
        if p.ndim != 4:
            raise InvalidState("projectors must have shape (T, P, d, d)")
        tol = settings.PROJECTOR_TOL
        herm = np.abs(p - np.conj(np.swapaxes(p, -1, -2))).max()
        idem = np.abs(p @ p - p).max()
        trace = np.abs(np.trace(p, axis1=-2, axis2=-1) - 1.0).max()
        if max(herm, idem, trace) > tol:
            raise InvalidState(
                "bundle entries must be rank-1 orthogonal projectors",
                hermiticity=float(herm),
                idempotency=float(idem),
                trace=float(trace),
            )
        return p

    @field_validator("frames", mode="before")
    @classmethod
    def freeze_frames(cls, value):
        return None if value is None else readonly(value)

    @model_validator(mode="after")
    def check_grid(self) -> "GroundBundle":
        if self.projectors.shape[:2] != (self.thetas.size, self.phis.size):
            raise InvalidState("projector grid does not match the (θ, φ) axes")
        return self
