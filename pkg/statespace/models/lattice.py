import math

import numpy as np
from pydantic import field_validator, model_validator

from statespace.core.config import settings
from statespace.core.errors import BadSiteSet, DimMismatch, NotIsometry, SizeCap
from statespace.models.base import FrozenModel, readonly


class LatticeSpec(FrozenModel):
    """Finite truncation: site v carries M_{site_dims[v]}, site 0 leftmost."""

    site_dims: tuple[int, ...]

    @field_validator("site_dims")
    @classmethod
    def check_dims(cls, dims: tuple[int, ...]) -> tuple[int, ...]:
        if not dims:
            raise BadSiteSet("a lattice needs at least one site")
        if any(d < 2 for d in dims):
            raise BadSiteSet("every site dimension must be >= 2", site_dims=list(dims))
        total = math.prod(dims)
        if total > settings.SIZE_CAP:
            raise SizeCap(
                f"total dimension {total} exceeds the size cap {settings.SIZE_CAP}",
                total=total,
                cap=settings.SIZE_CAP,
            )
        return dims

    @property
    def n_sites(self) -> int:
        return len(self.site_dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.site_dims)

    @classmethod
    def uniform(cls, dim: int, n_sites: int) -> "LatticeSpec":
        return cls(site_dims=(dim,) * n_sites)


class Isometry(FrozenModel):
    """Isometry f: C^a -> C^b with f*f = I_a.

    ``input_dims`` records a tensor factorization of the domain, used by the
    operad formulas when inputs are permuted; it defaults to a single factor.
    """

    matrix: np.ndarray
    input_dims: tuple[int, ...] = ()

    @field_validator("matrix", mode="before")
    @classmethod
    def check_isometry(cls, value) -> np.ndarray:
        f = readonly(value)
        if f.ndim != 2 or f.shape[0] < f.shape[1]:
            raise NotIsometry("an isometry is a b x a matrix with b >= a", shape=f.shape)
        residual = float(np.linalg.norm(f.conj().T @ f - np.eye(f.shape[1])))
        if residual > settings.ISOMETRY_TOL:
            raise NotIsometry("f*f deviates from the identity", residual=residual)
        return f

    @model_validator(mode="after")
    def default_factors(self) -> "Isometry":
        if not self.input_dims:
            object.__setattr__(self, "input_dims", (self.cols,))
        elif math.prod(self.input_dims) != self.cols:
            raise DimMismatch(
                "input factors do not multiply to the domain dimension",
                input_dims=list(self.input_dims),
                cols=self.cols,
            )
        return self

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def arity(self) -> int:
        return len(self.input_dims)

    @classmethod
    def identity(cls, dim: int) -> "Isometry":
        return cls(matrix=np.eye(dim))
