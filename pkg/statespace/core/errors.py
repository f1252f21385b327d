"""Error hierarchy.

Every failure raised by the library is a ``StateSpaceError``. The class
decides the process exit code of the command surface, the way an HTTP status
code classifies a failed request: input problems exit with 2, algorithmic
failures (refinement, convergence, ideal hits) with 3 and internal invariant
violations with 4.
"""

from typing import Any


class StateSpaceError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    @property
    def error_class(self) -> str:
        return type(self).__name__

    def to_payload(self) -> dict[str, Any]:
        return {
            "error": self.error_class,
            "detail": self.detail,
            "exit_code": self.exit_code,
            "context": {k: _jsonable(v) for k, v in self.context.items()},
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):
        return value.item()
    return str(value)


class InputError(StateSpaceError):
    exit_code = 2


class AlgorithmError(StateSpaceError):
    exit_code = 3


class InvariantViolation(StateSpaceError):
    exit_code = 4


# Input errors
class NotHermitian(InputError):
    pass


class DimMismatch(InputError):
    pass


class BadSiteSet(InputError):
    pass


class SizeCap(InputError):
    pass


class DomainError(InputError):
    pass


class InvalidMatrix(InputError):
    pass


class InvalidState(InputError):
    pass


class NotIsometry(InputError):
    pass


class NotSupported(InputError):
    pass


class SiteCountMismatch(InputError):
    pass


class NotUnit(InputError):
    pass


class NotGapped(InputError):
    pass


class DegenerateGround(InputError):
    pass


class UnknownSetting(InputError):
    pass


# Algorithmic failures
class NoConvergence(AlgorithmError):
    pass


class RefinementExhausted(AlgorithmError):
    pass


class GelfandIdeal(AlgorithmError):
    pass


class SingularOverlap(AlgorithmError):
    pass


# Invariant violations
class FactorizationFailure(InvariantViolation):
    pass


class Overflow(InvariantViolation):
    pass


class VerificationFailed(InvariantViolation):
    pass
