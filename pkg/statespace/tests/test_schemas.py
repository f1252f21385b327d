import numpy as np
import pytest
from pydantic import ValidationError

from statespace.core.errors import DimMismatch, InvalidState, UnknownSetting
from statespace.core.config import override_settings, settings
from statespace.models import LatticeSpec
from statespace.schemas.payloads import BundlePayload, GridPayload, MatrixPayload, MonoidPayload, PathPayload
from statespace.schemas.reports import VerificationReport
from statespace.schemas.run_config import RunConfig
from statespace.services import families, homotopy, sampling


def _round_trip(payload):
    text = payload.model_dump_json(indent=2)
    again = type(payload).model_validate_json(text).model_dump_json(indent=2)
    return text, again


def test_matrix_payload_is_lossless(rng):
    a = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    payload = MatrixPayload.from_array(a)
    assert np.array_equal(payload.to_array(), a)
    text, again = _round_trip(payload)
    assert text == again


def test_matrix_payload_checks_length():
    with pytest.raises(DimMismatch):
        MatrixPayload(rows=2, cols=2, re=[1.0, 0.0, 0.0], im=[0.0, 0.0, 0.0])


def test_payloads_forbid_extra_fields():
    with pytest.raises(ValidationError):
        MatrixPayload.model_validate({"rows": 1, "cols": 1, "re": [1.0], "im": [0.0], "extra": 1})


def test_path_payload_round_trip(rng):
    spec = LatticeSpec.uniform(2, 2)
    loop = sampling.random_loop(spec.total_dim, 9, rng)
    payload = PathPayload.from_path(loop, spec)
    text, again = _round_trip(payload)
    assert text == again
    restored = payload.to_path()
    assert np.array_equal(restored.states, loop.states)
    assert payload.lattice() == spec


def test_grid_payload_round_trip():
    grid = homotopy.contract_loop_matrix(sampling.great_circle_loop(20))
    payload = GridPayload.from_grid(grid)
    text, again = _round_trip(payload)
    assert text == again
    restored = payload.to_grid()
    assert np.array_equal(restored.lift, grid.lift)
    assert restored.stages == grid.stages


def test_bundle_payload_round_trip():
    bundle = families.berry_bundle(6, 6)
    payload = BundlePayload.from_bundle(bundle)
    text, again = _round_trip(payload)
    assert text == again
    assert np.array_equal(payload.to_bundle().projectors, bundle.projectors)


def test_monoid_payload(fixture_path):
    monoid = MonoidPayload.model_validate_json(fixture_path("z2_monoid.json").read_text()).to_monoid()
    assert monoid.relations == (((2,), (0,)),)


def test_report_serializes_infinity():
    report = VerificationReport(
        passed=False,
        tol=1e-6,
        t_samples=2,
        s_samples=2,
        s0_deviation=float("inf"),
        lift_identity_deviation=0.0,
        lift_consistency=0.0,
        boundary_deviation=0.0,
        final_deviation=0.0,
        continuity_modulus=0.0,
        continuity_bound=0.5,
    )
    assert '"s0_deviation":"Infinity"' in report.model_dump_json()


def test_run_config_tolerances():
    assert RunConfig.parse_tolerances(["delta_p=1e-5", "REFINE_DEPTH=30"]) == {"delta_p": 1e-5, "REFINE_DEPTH": 30.0}
    with pytest.raises(InvalidState):
        RunConfig.parse_tolerances(["delta_p"])
    with pytest.raises(InvalidState):
        RunConfig.parse_tolerances(["delta_p=small"])
    config = RunConfig(seed=1, size_cap=64)
    assert config.overrides() == {"SIZE_CAP": 64}
    with pytest.raises(ValidationError):
        RunConfig(seed=-1)


def test_override_settings_restores():
    before = settings.DELTA_P
    with override_settings(delta_p=1e-4):
        assert settings.DELTA_P == 1e-4
    assert settings.DELTA_P == before
    with pytest.raises(UnknownSetting):
        with override_settings(not_a_setting=1.0):
            pass


def test_override_settings_is_atomic():
    before = settings.DELTA_P
    with pytest.raises(UnknownSetting):
        with override_settings(delta_p=1e-4, bogus=1):
            pass
    assert settings.DELTA_P == before
