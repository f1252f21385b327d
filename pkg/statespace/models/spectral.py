import numpy as np
from pydantic import field_validator

from statespace.models.base import FrozenModel, readonly


class HermitianEig(FrozenModel):
    """Eigenvalues ascending; ``vectors[:, i]`` belongs to ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def real_values(cls, value) -> np.ndarray:
        return readonly(value, dtype=float)

    @field_validator("vectors", mode="before")
    @classmethod
    def complex_vectors(cls, value) -> np.ndarray:
        return readonly(value)

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T
