import numpy as np
from pydantic import BaseModel, ConfigDict

from statespace.core.errors import InvalidMatrix


class FrozenModel(BaseModel):
    """Immutable value type; numpy fields are stored read-only."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


def readonly(value, dtype=complex) -> np.ndarray:
    out = np.array(value, dtype=dtype, copy=True)
    if not np.all(np.isfinite(out)):
        raise InvalidMatrix("entries must be finite (no NaN/Inf)", shape=out.shape)
    out.flags.writeable = False
    return out
