from pathlib import Path

from pydantic import BaseModel, Field, field_validator

from statespace.core.errors import InvalidState


class RunConfig(BaseModel):
    """Options shared by every command; fixed config ⇒ identical artifacts."""

    seed: int = Field(..., ge=0, lt=2**64)
    out: Path = Path("out")
    tolerances: dict[str, float] = {}
    size_cap: int | None = None

    @field_validator("size_cap")
    @classmethod
    def check_cap(cls, value: int | None) -> int | None:
        if value is not None and value < 1:
            raise InvalidState("size cap must be positive", cap=value)
        return value

    @classmethod
    def parse_tolerances(cls, items: list[str]) -> dict[str, float]:
        out = {}
        for item in items:
            name, sep, value = item.partition("=")
            if not sep or not name:
                raise InvalidState("tolerance overrides take the form name=value", item=item)
            try:
                out[name] = float(value)
            except ValueError:
                raise InvalidState("tolerance value must be a number", item=item) from None
        return out

    def overrides(self) -> dict[str, float | int]:
        values: dict[str, float | int] = dict(self.tolerances)
        if self.size_cap is not None:
            values["SIZE_CAP"] = self.size_cap
        return values
