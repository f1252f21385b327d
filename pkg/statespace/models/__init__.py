# Value types shared by the services, in dependency order
from .lattice import LatticeSpec, Isometry
from .spectral import HermitianEig
from .state import DensityMatrix, ObservableFamily, fsum_trace, validate_density
from .path import HomotopyGrid, PhasePath, SampledPath, StageInfo, UnitaryPath
from .hamiltonian import GroundBundle, PumpParams, unit_vector
from .monoid import AbelianGroupInvariants, PresentedMonoid

__all__ = [
    "LatticeSpec",
    "Isometry",
    "HermitianEig",
    "DensityMatrix",
    "ObservableFamily",
    "fsum_trace",
    "validate_density",
    "SampledPath",
    "HomotopyGrid",
    "PhasePath",
    "UnitaryPath",
    "StageInfo",
    "PumpParams",
    "GroundBundle",
    "unit_vector",
    "PresentedMonoid",
    "AbelianGroupInvariants",
]
