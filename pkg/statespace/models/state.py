import math

import numpy as np
from pydantic import field_validator, model_validator

from statespace.core.config import settings
from statespace.core.errors import DimMismatch, InvalidState, NotHermitian
from statespace.models.base import FrozenModel, readonly
from statespace.models.lattice import LatticeSpec

# Eigenvalues within ROUNDOFF_ULPS·n·eps of zero are eigensolver noise and left as is.
ROUNDOFF_ULPS = 8


def fsum_trace(a: np.ndarray) -> float:
    """Correctly rounded real trace, independent of padding with zeros."""
    return math.fsum(np.real(np.diagonal(a)).tolist())


def validate_density(value, tol: float | None = None) -> np.ndarray:
    """Check a density matrix.

    Negative eigenvalues in [-tol, 0) are clipped to zero and the trace restored;
    anything below -tol is rejected.
    """
    tol = settings.STATE_TOL if tol is None else tol
    a = np.array(value, dtype=complex, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidState("a density matrix must be square", shape=a.shape)
    if not np.all(np.isfinite(a)):
        raise InvalidState("entries must be finite")
    scale = max(1.0, float(np.linalg.norm(a)))
    asym = float(np.linalg.norm(a - a.conj().T))
    if asym > tol * scale:
        raise NotHermitian("density matrix is not Hermitian", deviation=asym)
    a = (a + a.conj().T) / 2
    trace = fsum_trace(a)
    if abs(trace - 1.0) > tol:
        raise InvalidState("density matrix must have unit trace", trace=trace)
    lowest = float(np.linalg.eigvalsh(a)[0])
    if lowest < -tol:
        raise InvalidState("density matrix is not positive", min_eigenvalue=lowest)
    if lowest < -ROUNDOFF_ULPS * a.shape[0] * np.finfo(float).eps:
        values, vectors = np.linalg.eigh(a)
        a = (vectors * np.clip(values, 0.0, None)) @ vectors.conj().T
        a = (a + a.conj().T) / 2
        a = a / fsum_trace(a)
    return a


class DensityMatrix(FrozenModel):
    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def check_state(cls, value) -> np.ndarray:
        return readonly(validate_density(value))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        v = np.asarray(psi, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(matrix=np.outer(v, v.conj()))

    @classmethod
    def basis_state(cls, dim: int, index: int = 0) -> "DensityMatrix":
        e = np.zeros(dim, dtype=complex)
        e[index] = 1.0
        return cls.from_vector(e)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(matrix=np.eye(dim) / dim)


class ObservableFamily(FrozenModel):
    """Truncated dense family (A_k, λ_k) on a lattice.

    ``observables`` is a (K, n, n) stack of unit-norm Hermitian operators on
    the full lattice; ``weights[k]`` is the number of sites supporting A_k.
    """

    spec: LatticeSpec
    observables: np.ndarray
    weights: tuple[int, ...]
    regions: tuple[tuple[int, ...], ...]

    @field_validator("observables", mode="before")
    @classmethod
    def freeze(cls, value) -> np.ndarray:
        return readonly(value)

    def __len__(self) -> int:
        return len(self.weights)

    @model_validator(mode="after")
    def check_family(self) -> "ObservableFamily":
        count, n = len(self.weights), self.spec.total_dim
        if len(self.regions) != count:
            raise DimMismatch("weights and regions differ in length", weights=count, regions=len(self.regions))
        if count == 0:
            return self
        a = self.observables
        if a.shape != (count, n, n):
            raise DimMismatch("observables must be a (K, n, n) stack", shape=a.shape, expected=[count, n, n])
        if np.any(np.abs(a - a.conj().transpose(0, 2, 1)) > settings.STATE_TOL):
            raise NotHermitian("observables must be Hermitian")
        norms = np.max(np.abs(np.linalg.eigvalsh(a)), axis=1)
        if np.any(norms > 1.0 + settings.STATE_TOL):
            raise InvalidState("observables must have operator norm at most 1", max_norm=float(norms.max()))
        return self
