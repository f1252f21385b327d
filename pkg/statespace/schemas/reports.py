from pydantic import BaseModel, ConfigDict, Field


class ReportModel(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="strings")


class VerificationReport(ReportModel):
    """Maximal deviations of a homotopy grid from the 𝔄-homotopy conditions."""

    passed: bool
    tol: float
    t_samples: int
    s_samples: int
    s0_deviation: float = Field(..., description="column s=0 against the input path")
    lift_identity_deviation: float = Field(..., description="‖A_{t,0} − 𝟙‖")
    lift_consistency: float = Field(..., description="‖H(t,s) − A_{t,s}·H(t,0)‖")
    worst_cell: tuple[int, int] | None = None
    boundary_deviation: float = Field(..., description="columns t=0, t=1 against the basepoint")
    final_deviation: float = Field(..., description="column s=1 against the target")
    continuity_modulus: float
    continuity_bound: float


class SiteFactorization(ReportModel):
    site: int
    purity_deviation: float = Field(..., description="max over j ≤ site of ‖ρ_j − |e₀⟩⟨e₀|‖")
    factorization_residual: float = Field(..., description="sup |ψ(ab) − ψ(a)ψ(b)|")
    commutant_samples: int
    site_samples: int


class FactorizationReport(ReportModel):
    sites: list[SiteFactorization]
    final_deviation: float
    refinements: int = 0

    @property
    def max_residual(self) -> float:
        return max((s.factorization_residual for s in self.sites), default=0.0)


class PumpPoint(ReportModel):
    w_index: int
    t_index: int
    w: tuple[float, float, float]
    t: float
    ground_energy: float
    gap: float
    continuity_to_previous: float | None = None


class PumpFamilyReport(ReportModel):
    L: int
    boundary: str
    points: list[PumpPoint]
    min_gap: float
    continuity_modulus: float
    pole_deviation: float = Field(..., description="max spread across w at t = ±1")


class PropertyResult(ReportModel):
    name: str
    passed: bool
    detail: str
    seconds: float


class ChernResult(ReportModel):
    value: int
    raw: float = Field(..., description="plaquette flux sum divided by 2π before rounding")
    residual: float = Field(..., description="|raw − value|")
    max_plaquette_flux: float


class FlattenReport(ReportModel):
    t: float
    spectrum_before: list[float]
    spectrum_after: list[float]
    index: int = Field(..., description="number of negative eigenvalues")


class K0Report(ReportModel):
    group: str
    free_rank: int
    torsion: list[int]
    localized_at: list[int] | None = None
    is_group: bool | None = None


class MetricReport(ReportModel):
    value: float
    tail_bound: float
    K: int
    family_size: int
    site_dims: list[int]


class CheckReport(ReportModel):
    seed: int
    full: bool
    passed: bool
    results: list[PropertyResult]
