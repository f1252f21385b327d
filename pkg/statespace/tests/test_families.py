import numpy as np
import pytest

from statespace.core.errors import DegenerateGround, InvalidMatrix, InvalidState, NotGapped, NotUnit, SizeCap
from statespace.models import PumpParams
from statespace.services import families, sampling
from statespace.tasks.suite import gapped_hermitian


@pytest.fixture(name="bundle", scope="module")
def bundle_fixture():
    return families.berry_bundle(24, 24)


def test_berry_hamiltonian_squares_to_identity():
    w = np.array([1.0, 2.0, 2.0]) / 3.0
    h = families.berry_hamiltonian(w)
    assert np.allclose(h @ h, np.eye(2))
    with pytest.raises(NotUnit):
        families.berry_hamiltonian([1.0, 1.0, 0.0])


def test_chern_ground_band(bundle):
    result = families.chern_number(bundle)
    assert result.value == -1
    assert result.residual < 0.05
    assert abs(families.curvature_chern(bundle) - result.value) < 0.05


def test_chern_excited_band():
    result = families.chern_number(families.berry_bundle(24, 24, band=1))
    assert result.value == 1


def test_chern_is_gauge_invariant(bundle, rng):
    phases = np.exp(2j * np.pi * rng.random(bundle.frames.shape[:2]))
    redressed = bundle.model_copy(update={"frames": bundle.frames * phases[..., None]})
    assert families.chern_number(redressed).raw == pytest.approx(families.chern_number(bundle).raw, abs=1e-10)


def test_chern_from_projectors_only(bundle):
    bare = bundle.model_copy(update={"frames": None})
    assert families.chern_number(bare).value == families.chern_number(bundle).value


def test_pump_couplings():
    assert families.pump_couplings(0.0) == (0.0, 0.0)
    assert families.pump_couplings(1.0) == (0.5, 0.0)
    assert families.pump_couplings(-1.0) == (0.0, 0.5)
    assert families.pump_couplings(0.5) == (0.0, 0.0)


def test_heisenberg_pair_spectrum():
    values = np.linalg.eigvalsh(families.heisenberg_pair(0, 2))
    assert values == pytest.approx([-3.0, 1.0, 1.0, 1.0])


@pytest.mark.parametrize("t", [0.0, 1.0])
def test_pump_ground_limits(t, eig_method):
    _, gap = families.pump_ground(PumpParams(w=(0, 0, 1), t=t, L=2))
    assert gap == pytest.approx(2.0, abs=1e-9)


def test_pump_defaults_to_periodic_chain():
    assert PumpParams(w=(0, 0, 1), t=0.0, L=2).boundary == "periodic"


def test_open_chain_is_degenerate_at_negative_dimerization():
    with pytest.raises(DegenerateGround):
        families.pump_ground(PumpParams(w=(0, 0, 1), t=-1.0, L=4, boundary="open"))
    _, gap = families.pump_ground(PumpParams(w=(0, 0, 1), t=-1.0, L=4))
    assert gap == pytest.approx(2.0, abs=1e-9)


def test_pump_params_validation(settings_override):
    with pytest.raises(InvalidState):
        PumpParams(w=(0, 0, 1), t=0.0, L=3)
    with pytest.raises(InvalidState):
        PumpParams(w=(0, 0, 1), t=1.5, L=2)
    with pytest.raises(NotUnit):
        PumpParams(w=(0, 0, 2), t=0.0, L=2)
    settings_override(SIZE_CAP=8)
    with pytest.raises(SizeCap):
        PumpParams(w=(0, 0, 1), t=0.0, L=4)


def test_pump_family_small_grid(eig_method):
    ws = sampling.fibonacci_sphere(2)
    ts = [-1.0, -0.5, 0.0, 0.5, 1.0]
    states, report = families.pump_family(ws, ts, 4)
    assert states.shape == (2, 5, 16, 16)
    assert len(report.points) == 10
    assert report.min_gap > 0.1
    assert report.pole_deviation <= 1e-8
    assert report.points[0].continuity_to_previous is None
    assert report.points[1].continuity_to_previous is not None


def test_pump_family_is_thread_independent(settings_override):
    ws = sampling.fibonacci_sphere(2)
    ts = [-1.0, 0.0, 1.0]
    sequential, _ = families.pump_family(ws, ts, 2)
    settings_override(STATESPACE_THREADS=4)
    threaded, _ = families.pump_family(ws, ts, 2)
    assert np.array_equal(sequential, threaded)


def test_flatten_endpoints(rng):
    a = gapped_hermitian(6, rng)
    assert np.allclose(families.flatten(a, 0.0), a)
    flat = families.flatten(a, 1.0)
    assert np.allclose(flat @ flat, np.eye(6), atol=1e-10)
    assert np.allclose(np.abs(np.linalg.eigvalsh(flat)), 1.0)


def test_flatten_errors():
    with pytest.raises(NotGapped):
        families.flatten(np.diag([1.0, 0.0]), 0.5)
    with pytest.raises(InvalidMatrix):
        families.flatten(np.eye(2), 1.5)


def test_neg_index_and_block_sum(rng):
    a = np.diag([-2.0, 1.0, -0.5])
    b = gapped_hermitian(4, rng)
    assert families.neg_index(a) == 2
    assert families.neg_index(families.block_sum(a, b)) == 2 + families.neg_index(b)
    assert families.block_sum(a, np.zeros((0, 0))).shape == (3, 3)
    assert families.neg_index(families.stabilize_admissible(a)) == 2


def test_negative_eigenspace_is_projector(rng):
    a = gapped_hermitian(5, rng)
    p = families.negative_eigenspace(a)
    assert np.allclose(p @ p, p, atol=1e-10)
    assert np.trace(p).real == pytest.approx(families.neg_index(a))


def test_index_along_path_detects_crossing(rng):
    a = gapped_hermitian(4, rng)
    indices, crossings = families.index_along_path([families.flatten(a, t) for t in np.linspace(0, 1, 5)])
    assert len(set(indices)) == 1
    assert crossings == []
    _, crossings = families.index_along_path([np.diag([1.0]), np.diag([0.5]), np.diag([-1.0])])
    assert crossings == [1]
