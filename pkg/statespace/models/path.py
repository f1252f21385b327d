import numpy as np
from pydantic import field_validator, model_validator

from statespace.core.config import settings
from statespace.core.errors import DimMismatch, InvalidState
from statespace.models.base import FrozenModel, readonly
from statespace.models.state import validate_density


def _check_params(params: np.ndarray, name: str) -> None:
    if params.ndim != 1 or params.size < 2:
        raise InvalidState(f"{name} needs at least two samples")
    if params[0] != 0.0 or params[-1] != 1.0:
        raise InvalidState(f"{name} must start at 0 and end at 1")
    if np.any(np.diff(params) <= 0):
        raise InvalidState(f"{name} must be strictly increasing")


class SampledPath(FrozenModel):
    """A path of density matrices sampled at ascending parameters in [0, 1]."""

    params: np.ndarray
    states: np.ndarray
    loop: bool = False

    @field_validator("params", mode="before")
    @classmethod
    def check_params(cls, value) -> np.ndarray:
        params = readonly(value, dtype=float)
        _check_params(params, "params")
        return params

    @field_validator("states", mode="before")
    @classmethod
    def check_states(cls, value) -> np.ndarray:
        stack = np.array(value, dtype=complex)
        if stack.ndim != 3:
            raise InvalidState("states must be a stack of square matrices", shape=stack.shape)
        return readonly(np.stack([validate_density(rho) for rho in stack]))

    @model_validator(mode="after")
    def check_shape(self) -> "SampledPath":
        if self.states.shape[0] != self.params.size:
            raise DimMismatch(
                "one state per parameter sample is required",
                params=self.params.size,
                states=self.states.shape[0],
            )
        if self.loop:
            gap = float(np.linalg.norm(self.states[0] - self.states[-1]))
            if gap > settings.STATE_TOL:
                raise InvalidState("loop endpoints differ", deviation=gap)
        return self

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.params.size


class PhasePath(FrozenModel):
    """Unit-modulus phases λ_t; ``gamma`` holds the (refined) input samples."""

    params: np.ndarray
    phases: np.ndarray
    gamma: np.ndarray

    @field_validator("params", mode="before")
    @classmethod
    def check_params(cls, value) -> np.ndarray:
        return readonly(value, dtype=float)

    @field_validator("phases", mode="before")
    @classmethod
    def check_phases(cls, value) -> np.ndarray:
        phases = readonly(value)
        if np.any(np.abs(np.abs(phases) - 1.0) > 1e-12):
            raise InvalidState("phases must have unit modulus")
        return phases

    @field_validator("gamma", mode="before")
    @classmethod
    def freeze_gamma(cls, value) -> np.ndarray:
        return readonly(value)


class UnitaryPath(FrozenModel):
    params: np.ndarray
    unitaries: np.ndarray

    @field_validator("params", mode="before")
    @classmethod
    def check_params(cls, value) -> np.ndarray:
        return readonly(value, dtype=float)

    @field_validator("unitaries", mode="before")
    @classmethod
    def freeze(cls, value) -> np.ndarray:
        return readonly(value)


class StageInfo(FrozenModel):
    label: str
    s_start: float
    s_end: float


class HomotopyGrid(FrozenModel):
    """States H(t, s) = A_{t,s}·ω_t on a T x S grid together with the lifts."""

    t_params: np.ndarray
    s_params: np.ndarray
    states: np.ndarray
    lift: np.ndarray
    final_column_exempt: bool = False
    stages: tuple[StageInfo, ...] = ()

    @field_validator("t_params", "s_params", mode="before")
    @classmethod
    def check_axis(cls, value) -> np.ndarray:
        params = readonly(value, dtype=float)
        _check_params(params, "grid axis")
        return params

    @field_validator("states", "lift", mode="before")
    @classmethod
    def freeze(cls, value) -> np.ndarray:
        return readonly(value)

    @model_validator(mode="after")
    def check_shape(self) -> "HomotopyGrid":
        expected = (self.t_params.size, self.s_params.size)
        for name in ("states", "lift"):
            arr = getattr(self, name)
            if arr.ndim != 4 or arr.shape[:2] != expected or arr.shape[2] != arr.shape[3]:
                raise DimMismatch(
                    f"{name} must have shape (T, S, n, n)",
                    expected=list(expected),
                    shape=list(arr.shape),
                )
        if self.states.shape != self.lift.shape:
            raise DimMismatch("states and lift shapes differ")
        return self

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    def column(self, index: int) -> np.ndarray:
        return self.states[:, index]
