import hashlib
import json

import pytest
from typer.testing import CliRunner

from statespace.core.config import settings
from statespace.main import app, normalize_argv
from statespace.tests.conftest import read_json


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_normalize_argv():
    assert normalize_argv(["--tol.delta_p=1e-5", "contract", "x.json"]) == ["--tol", "delta_p=1e-5", "contract", "x.json"]
    assert normalize_argv(["--tol.eta_step", "0.4"]) == ["--tol", "eta_step=0.4"]
    assert normalize_argv(["--tol", "a=1"]) == ["--tol", "a=1"]


def test_schema_flag():
    result = CliRunner().invoke(app, ["--schema"])
    assert result.exit_code == 0
    schema = json.loads(result.stdout)
    assert "lift_consistency" in schema["deviations.csv"]
    assert "gap" in schema["pump.csv"]


def test_contract_constant_loop(cli_runner, fixture_path, tmp_out):
    result = cli_runner("contract", str(fixture_path("constant_loop.json")))
    assert result.exit_code == 0, result.stdout
    report = read_json(tmp_out / "report.json")
    assert report["passed"] is True
    assert (tmp_out / "grid.json").exists()
    header = (tmp_out / "deviations.csv").read_text().splitlines()[0]
    assert header == "t_index,s_index,t,s,lift_consistency,basepoint_distance"


def test_contract_malformed_json(cli_runner, tmp_path, tmp_out):
    broken = tmp_path / "broken.json"
    broken.write_text('{"params": [0.0, 1.0], "states": [')
    result = cli_runner("contract", str(broken))
    assert result.exit_code == 2
    error = read_json(tmp_out / "error.json")
    assert error["exit_code"] == 2
    assert error["error"] == "ValidationError"


def test_contract_unbased_loop_is_input_error(cli_runner, tmp_path, tmp_out):
    state = {"rows": 2, "cols": 2, "re": [0.0, 0.0, 0.0, 1.0], "im": [0.0, 0.0, 0.0, 0.0]}
    loop = tmp_path / "unbased.json"
    loop.write_text(json.dumps({"params": [0.0, 1.0], "states": [state, state]}))
    result = cli_runner("contract", str(loop))
    assert result.exit_code == 2
    assert read_json(tmp_out / "error.json")["error"] == "InvalidState"


def test_contract_refinement_exhausted(cli_runner, tmp_out):
    assert cli_runner("loop", "--kind", "great-circle", "--samples", "5").exit_code == 0
    result = cli_runner("--tol.refine_depth=0", "contract", str(tmp_out / "loop.json"))
    assert result.exit_code == 3
    assert read_json(tmp_out / "error.json")["error"] == "RefinementExhausted"
    assert settings.REFINE_DEPTH == 20


def test_contract_failed_verification(cli_runner, tmp_out):
    assert cli_runner("loop", "--kind", "great-circle", "--samples", "100").exit_code == 0
    result = cli_runner("--tol.continuity_bound=0", "contract", str(tmp_out / "loop.json"))
    assert result.exit_code == 4
    assert read_json(tmp_out / "report.json")["passed"] is False
    assert read_json(tmp_out / "error.json")["error"] == "VerificationFailed"


def test_contract_seeded_three_qubit_loop(cli_runner, tmp_out):
    assert cli_runner("loop", "--sites", "2,2,2", "--samples", "60", seed=7).exit_code == 0
    result = cli_runner("contract", str(tmp_out / "loop.json"))
    assert result.exit_code == 0, result.stdout
    assert read_json(tmp_out / "report.json")["passed"] is True


def test_disentangle_seeded_three_qubit_loop(cli_runner, tmp_out):
    assert cli_runner("loop", "--sites", "2,2,2", "--samples", "60", seed=7).exit_code == 0
    result = cli_runner("disentangle", str(tmp_out / "loop.json"))
    assert result.exit_code == 0, result.stdout
    factorization = read_json(tmp_out / "factorization.json")
    assert [s["site"] for s in factorization["sites"]] == [0, 1, 2]
    assert max(s["factorization_residual"] for s in factorization["sites"]) <= 1e-7


def test_disentangle_needs_sites(cli_runner, tmp_out):
    assert cli_runner("loop", "--kind", "constant", "--sites", "4").exit_code == 0
    payload = read_json(tmp_out / "loop.json")
    payload["site_dims"] = None
    (tmp_out / "bare.json").write_text(json.dumps(payload))
    result = cli_runner("disentangle", str(tmp_out / "bare.json"))
    assert result.exit_code == 2
    assert cli_runner("disentangle", "--sites", "2,2", str(tmp_out / "bare.json")).exit_code == 0


def test_artifacts_are_deterministic(tmp_path):
    runner = CliRunner()
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert runner.invoke(app, ["--seed", "11", "--out", str(out), "loop", "--samples", "40"]).exit_code == 0
        runner.invoke(app, ["--out", str(out), "contract", str(out / "loop.json")])
        digests.append([_digest(out / name) for name in ("loop.json", "grid.json", "report.json", "deviations.csv")])
    assert digests[0] == digests[1]


def test_loop_seed_changes_output(tmp_path):
    runner = CliRunner()
    for seed in ("1", "2"):
        runner.invoke(app, ["--seed", seed, "--out", str(tmp_path / seed), "loop", "--samples", "10"])
    assert _digest(tmp_path / "1" / "loop.json") != _digest(tmp_path / "2" / "loop.json")


def test_unknown_tolerance(cli_runner, fixture_path):
    result = cli_runner("--tol.not_a_setting=1", "k0", str(fixture_path("n0_monoid.json")))
    assert result.exit_code == 2


def test_size_cap(cli_runner):
    result = cli_runner("--cap", "4", "loop", "--sites", "2,2,2")
    assert result.exit_code == 2
    assert settings.SIZE_CAP == 4096


@pytest.mark.parametrize("name, expected", [("n0_monoid.json", "Z"), ("z2_monoid.json", "Z/2")])
def test_k0(cli_runner, fixture_path, tmp_out, name, expected):
    result = cli_runner("k0", str(fixture_path(name)))
    assert result.exit_code == 0
    assert result.stdout.strip().splitlines()[-1] == expected
    assert read_json(tmp_out / "k0.json")["group"] == expected


def test_k0_localized(cli_runner, fixture_path, tmp_out):
    result = cli_runner("k0", "--localize", "1", str(fixture_path("n0_monoid.json")))
    assert result.exit_code == 0
    report = read_json(tmp_out / "k0.json")
    assert report["group"] == "Z"
    assert report["is_group"] is True
    assert report["localized_at"] == [1]


def test_berry_then_chern(cli_runner, tmp_out):
    assert cli_runner("berry").exit_code == 0
    result = cli_runner("chern", str(tmp_out / "bundle.json"))
    assert result.exit_code == 0
    assert "C = -1" in result.stdout
    chern = read_json(tmp_out / "chern.json")
    assert abs(chern["value"]) == 1
    assert chern["residual"] < 0.05


def test_pump_csv(cli_runner, tmp_out):
    result = cli_runner("pump", "--L", "2", "--n-w", "2", "--n-t", "3")
    assert result.exit_code == 0, result.stdout
    lines = (tmp_out / "pump.csv").read_text().splitlines()
    assert lines[0] == "w_index,t_index,w1,w2,w3,t,ground_energy,gap,continuity"
    assert len(lines) == 1 + 6
    assert lines[1].endswith(",")
    assert read_json(tmp_out / "pump_report.json")["min_gap"] > 0.1


def test_pump_rejects_odd_chain(cli_runner):
    assert cli_runner("pump", "--L", "3").exit_code == 2


def test_flatten(cli_runner, fixture_path, tmp_out):
    result = cli_runner("flatten", str(fixture_path("gapped_matrix.json")))
    assert result.exit_code == 0
    assert "k = 1" in result.stdout
    report = read_json(tmp_out / "flatten.json")
    assert report["index"] == 1
    assert report["spectrum_after"] == pytest.approx([-1.0, 1.0, 1.0])


def test_metric(cli_runner, fixture_path, tmp_out):
    zero, plus = str(fixture_path("zero_state.json")), str(fixture_path("plus_state.json"))
    assert cli_runner("metric", zero, zero).exit_code == 0
    assert read_json(tmp_out / "metric.json")["value"] == 0.0
    assert cli_runner("metric", zero, plus).exit_code == 0
    report = read_json(tmp_out / "metric.json")
    assert report["value"] > 0.0
    assert report["family_size"] == 3


def test_check_selected_properties(cli_runner, tmp_out):
    result = cli_runner("check", "--only", "k0", "--only", "chern")
    assert result.exit_code == 0, result.stdout
    report = read_json(tmp_out / "check.json")
    assert report["passed"] is True
    assert [r["name"] for r in report["results"]] == ["k0", "chern"]


def test_check_unknown_property(cli_runner):
    assert cli_runner("check", "--only", "nope").exit_code == 2
