"""Shared plumbing of the commands: run configuration, artifact I/O and error exits."""

import csv
import functools
import json
import logging
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence, TypeVar

import typer
from pydantic import BaseModel, ValidationError

from statespace.core.errors import StateSpaceError
from statespace.schemas.payloads import ErrorPayload
from statespace.schemas.run_config import RunConfig

logger = logging.getLogger(__name__)

P = TypeVar("P", bound=BaseModel)


def get_config(ctx: typer.Context) -> RunConfig:
    config = ctx.find_root().obj
    if not isinstance(config, RunConfig):
        raise RuntimeError("run configuration missing; commands must run under the statespace app")
    return config


def output_dir(config: RunConfig) -> Path:
    config.out.mkdir(parents=True, exist_ok=True)
    return config.out


def write_json(config: RunConfig, name: str, model: BaseModel) -> Path:
    path = output_dir(config) / name
    path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.debug("Wrote artifact", extra={"extra_info": {"event": "ARTIFACT", "path": str(path)}})
    return path


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return float.__repr__(float(value))
    return value


def write_csv(config: RunConfig, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = output_dir(config) / name
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug("Wrote artifact", extra={"extra_info": {"event": "ARTIFACT", "path": str(path)}})
    return path


def read_payload(path: Path, model: type[P]) -> P:
    return model.model_validate_json(path.read_bytes())


def parse_dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated integers, got {text!r}") from None


def _fail(payload: ErrorPayload, ctx: typer.Context | None) -> None:
    text = payload.model_dump_json(indent=2)
    typer.echo(text)
    if ctx is not None and isinstance(ctx.find_root().obj, RunConfig):
        try:
            path = output_dir(ctx.find_root().obj) / "error.json"
            path.write_text(text + "\n", encoding="utf-8")
        except OSError:
            logger.warning("Could not write error.json", exc_info=True)
    raise typer.Exit(code=payload.exit_code)


def cli_errors(fn: Callable) -> Callable:
    """Turn library errors into error JSON and the exit code of their class."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = kwargs.get("ctx")
        try:
            return fn(*args, **kwargs)
        except StateSpaceError as exc:
            log_context = {"event": "COMMAND_FAILED", "command": fn.__name__, **exc.to_payload()}
            logger.error(exc.detail, extra={"extra_info": log_context})
            _fail(ErrorPayload(**exc.to_payload()), ctx)
        except ValidationError as exc:
            logger.error("Input failed validation", extra={"extra_info": {"event": "COMMAND_FAILED", "command": fn.__name__}})
            errors = json.loads(exc.json(include_url=False))
            _fail(
                ErrorPayload(error="ValidationError", detail=f"{exc.title} failed validation", exit_code=2, context={"errors": errors}),
                ctx,
            )

    return wrapper
