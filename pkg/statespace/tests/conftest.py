import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from statespace.core.config import override_settings
from statespace.core.seeding import make_rng
from statespace.main import app

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(name="rng")
def rng_fixture():
    """A fresh seeded generator per test."""
    return make_rng(1234)


@pytest.fixture(name="tmp_out")
def tmp_out_fixture(tmp_path: Path) -> Path:
    return tmp_path / "out"


@pytest.fixture(name="settings_override")
def settings_override_fixture():
    """Apply setting overrides for the rest of the test, undone at teardown."""
    stack = []

    def apply(**values):
        manager = override_settings(**values)
        manager.__enter__()
        stack.append(manager)

    yield apply
    while stack:
        stack.pop().__exit__(None, None, None)


@pytest.fixture(name="eig_method", params=["jacobi", "lapack"])
def eig_method_fixture(request, settings_override):
    """Run the test once per eigensolver."""
    settings_override(eig_method=request.param)
    return request.param


@pytest.fixture(name="cli_runner")
def cli_runner_fixture(tmp_out: Path):
    """Invoke the command surface with --out pointed at a temporary directory."""
    runner = CliRunner()

    def invoke(*args: str, seed: int | None = None):
        prefix = ["--out", str(tmp_out)]
        if seed is not None:
            prefix += ["--seed", str(seed)]
        return runner.invoke(app, [*prefix, *args])

    return invoke


@pytest.fixture(name="fixture_path")
def fixture_path_fixture():
    def path(name: str) -> Path:
        return FIXTURES / name

    return path


def read_json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))
