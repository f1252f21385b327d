from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from statespace.core.errors import DimMismatch, InvalidState


class PresentedMonoid(BaseModel):
    """Commutative monoid ⟨g_1..g_n | u ~ v⟩ on exponent vectors."""

    model_config = ConfigDict(frozen=True)

    n_gens: int
    relations: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...] = ()

    @model_validator(mode="after")
    def check_relations(self) -> "PresentedMonoid":
        if self.n_gens < 0:
            raise InvalidState("n_gens must be non-negative")
        for u, v in self.relations:
            if len(u) != self.n_gens or len(v) != self.n_gens:
                raise DimMismatch(
                    "relation vectors must have length n_gens",
                    n_gens=self.n_gens,
                    relation=[list(u), list(v)],
                )
            if min((*u, *v), default=0) < 0:
                raise InvalidState("exponents must be non-negative")
        return self


class AbelianGroupInvariants(BaseModel):
    """Z^free_rank ⊕ Z/d_1 ⊕ ... with d_1 | d_2 | ..."""

    model_config = ConfigDict(frozen=True)

    free_rank: int
    torsion: tuple[int, ...] = ()

    @field_validator("torsion")
    @classmethod
    def check_chain(cls, torsion: tuple[int, ...]) -> tuple[int, ...]:
        if any(d < 2 for d in torsion):
            raise InvalidState("torsion coefficients must be >= 2")
        if any(b % a for a, b in zip(torsion, torsion[1:])):
            raise InvalidState("torsion must form a divisibility chain")
        return torsion

    def __str__(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts.extend(f"Z/{d}" for d in self.torsion)
        return " + ".join(parts) if parts else "0"
