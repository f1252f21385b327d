from contextlib import contextmanager
from typing import Any, Iterator, Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env", env_ignore_empty=True, extra="ignore", validate_assignment=True
    )

    PROJECT_NAME: str = "statespace"
    PROJECT_DESCRIPTION: str = (
        "Finite-truncation state spaces of quantum lattice systems: "
        "state actions, loop contraction, model families and phase algebra"
    )
    VERSION: str = "1.0.0"
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"
    LOG_ROTATION_SIZE_MB: int = 5
    LOG_ROTATION_BACKUP_COUNT: int = 3

    # Execution
    STATESPACE_THREADS: int = 0
    SEED: int = 20240917
    SIZE_CAP: int = 4096
    EIG_METHOD: Literal["jacobi", "lapack"] = "jacobi"
    JACOBI_MAX_SWEEPS: int = 100
    JACOBI_TOL: float = 1e-13

    # Linear algebra
    TAU_HERM: float = 1e-9
    TAU_EIG: float = 1e-8
    DEGENERACY_GAP: float = 1e-10
    ISOMETRY_TOL: float = 1e-10

    # States
    STATE_TOL: float = 1e-9
    TAU_IDEAL: float = 1e-12
    CORNER_TOL: float = 1e-8

    # Homotopy
    DELTA_P: float = 1e-6
    DELTA_PURE: float = 1e-6
    EPS_EDGE: float = 1e-8
    DELTA_EDGE: float = 1e-8
    THETA_STEP: float = 0.2
    ETA_STEP: float = 0.5
    DELTA_NB: float = 0.125
    EPS_DEG: float = 1e-6
    GAP_RAMP: float = 0.25
    ROTATION_RATE: float = 32.0
    PIN_WINDOW: float = 0.1
    INTERIOR_RADIUS: float = 0.5
    REFINE_DEPTH: int = 20
    STAGE_SAMPLES: int = 17
    CONTINUITY_K: int = 16
    CONTINUITY_BOUND: float = 0.5
    FACTORIZATION_TOL: float = 1e-7
    FACTORIZATION_FAIL: float = 1e-5
    FACTORIZATION_SAMPLES: int = 24

    # Models
    DELTA_GAP: float = 1e-8
    DELTA_ADMISSIBLE: float = 1e-8
    OVERLAP_TOL: float = 1e-8
    PROJECTOR_TOL: float = 1e-9
    METRIC_K: int = 16

    # Phases
    STABLE_EQUIV_BOUND: int = 16
    MAX_REWRITE_STATES: int = 200_000
    MAX_INT_BITS: int = 1 << 16


settings = Settings()


def _resolve(name: str) -> str:
    key = name.replace("-", "_").replace(".", "_").upper()
    if key not in Settings.model_fields:
        from statespace.core.errors import UnknownSetting

        raise UnknownSetting(f"Unknown setting '{name}'", setting=name)
    return key


def apply_overrides(values: dict[str, Any]) -> dict[str, Any]:
    """Set the given settings in place and return the previous values."""
    keys = {_resolve(name): value for name, value in values.items()}
    previous: dict[str, Any] = {}
    try:
        for key, value in keys.items():
            previous[key] = getattr(settings, key)
            setattr(settings, key, value)
    except Exception:
        restore(previous)
        raise
    return previous


def restore(previous: dict[str, Any]) -> None:
    for key, value in previous.items():
        setattr(settings, key, value)


@contextmanager
def override_settings(**values: Any) -> Iterator[Settings]:
    """Temporarily override settings, e.g. ``override_settings(delta_p=1e-5)``."""
    previous = apply_overrides(values)
    try:
        yield settings
    finally:
        restore(previous)
