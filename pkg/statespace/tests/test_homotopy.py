import re

import numpy as np
import pytest

from statespace.core.errors import DimMismatch, DomainError, GelfandIdeal, InvalidState
from statespace.core.seeding import make_rng
from statespace.models import HomotopyGrid, LatticeSpec, PhasePath, SampledPath, UnitaryPath
from statespace.services import homotopy, sampling


@pytest.fixture(name="bloch_loop")
def bloch_loop_fixture() -> SampledPath:
    return sampling.great_circle_loop(200)


def test_refine_path_inserts_midpoints():
    loop = sampling.great_circle_loop(5)
    refined = homotopy.refine_path(loop, [1, 3])
    assert len(refined) == 7
    assert refined.params.tolist() == [0.0, 0.25, 0.375, 0.5, 0.75, 0.875, 1.0]
    assert np.allclose(refined.states[2], (loop.states[1] + loop.states[2]) / 2)
    assert refined.loop


def test_refine_path_rejects_bad_interval():
    with pytest.raises(DimMismatch):
        homotopy.refine_path(sampling.great_circle_loop(3), [2])


def test_phase_lift_unit_circle():
    t = np.linspace(0.0, 1.0, 256)
    lifted = homotopy.phase_lift(np.exp(2j * np.pi * t))
    assert lifted.phases.size == 256
    assert np.max(np.abs(lifted.phases * lifted.gamma - 1.0)) <= 1e-8


def test_phase_lift_origin_is_trivial():
    lifted = homotopy.phase_lift(np.zeros(8))
    assert np.allclose(lifted.phases, 1.0)


def test_phase_lift_random_disk_path(rng):
    gamma = sampling.random_disk_path(64, rng)
    lifted = homotopy.phase_lift(gamma)
    assert homotopy.check_phase_lift(lifted.gamma, lifted.phases) == ([], [])
    assert np.all(np.abs(np.abs(lifted.phases) - 1.0) <= 1e-12)


def test_phase_lift_outside_disk():
    with pytest.raises(DomainError):
        homotopy.phase_lift([0.0, 1.5, 0.0])


def test_unitary_lift_fixes_basepoint(bloch_loop):
    refined, unitaries = homotopy.unitary_lift(bloch_loop)
    assert homotopy.check_unitary_lift(refined, unitaries) == []
    for u in unitaries.unitaries:
        assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12)


def test_contract_constant_loop():
    loop = sampling.constant_loop(3, 4)
    grid = homotopy.contract_loop_matrix(loop)
    report = homotopy.verify_homotopy(grid, input_path=loop)
    assert report.passed
    assert report.final_deviation == 0.0


def test_contract_bloch_great_circle(bloch_loop):
    grid = homotopy.contract_loop_matrix(bloch_loop)
    report = homotopy.verify_homotopy(grid, tol=1e-6, input_path=bloch_loop)
    assert report.passed
    assert report.worst_cell is None
    assert np.allclose(grid.states[:, -1], homotopy.basepoint(2), atol=1e-6)
    assert [stage.label for stage in grid.stages][:2] == ["unitary[n=2]", "projection[n=2]"]


def test_contract_rejects_unbased_loop():
    states = np.repeat(np.diag([0.0, 1.0]).astype(complex)[None], 3, axis=0)
    loop = SampledPath(params=[0.0, 0.5, 1.0], states=states, loop=True)
    with pytest.raises(InvalidState):
        homotopy.contract_loop_matrix(loop)


def test_contract_rejects_open_path():
    path = SampledPath(params=[0.0, 1.0], states=sampling.great_circle_loop(2).states, loop=False)
    with pytest.raises(InvalidState):
        homotopy.contract_loop_matrix(path)


def test_loop_endpoints_must_agree():
    states = np.array([homotopy.basepoint(2), np.diag([0.0, 1.0])])
    with pytest.raises(InvalidState):
        SampledPath(params=[0.0, 1.0], states=states, loop=True)


def test_project_homotopy_gelfand_ideal():
    path = SampledPath(params=[0.0, 1.0], states=np.repeat(np.diag([0.0, 1.0])[None], 2, axis=0))
    with pytest.raises(GelfandIdeal):
        homotopy.project_homotopy(path, np.diag([1.0, 0.0]))


def test_project_homotopy_reaches_corner():
    rho = np.full((2, 2), 0.5, dtype=complex)
    path = SampledPath(params=[0.0, 1.0], states=np.array([rho, rho]))
    grid = homotopy.project_homotopy(path, np.diag([1.0, 0.0]))
    assert np.allclose(grid.states[:, -1], homotopy.basepoint(2))
    assert np.allclose(grid.lift[:, 0], np.eye(2))


def test_pushforward_pads_with_identity():
    grid = homotopy.trivial_grid(sampling.constant_loop(2))
    pushed = homotopy.pushforward_homotopy(grid, 4)
    assert pushed.dim == 4
    assert np.allclose(pushed.lift[0, 0], np.eye(4))
    assert np.allclose(pushed.states[0, 0], homotopy.basepoint(4))
    with pytest.raises(DimMismatch):
        homotopy.pushforward_homotopy(pushed, 2)


def test_concatenate_places_stages_on_slots():
    grid = homotopy.trivial_grid(sampling.constant_loop(2, 3))
    glued = homotopy.concatenate_homotopies([grid, grid])
    assert glued.s_params.tolist() == [0.0, 0.5, 1.0]
    assert [(s.s_start, s.s_end) for s in glued.stages] == [(0.0, 0.5), (0.5, 1.0)]
    assert homotopy.verify_homotopy(glued).passed


def test_cell_deviations_mark_ideal_hits():
    states = np.repeat(homotopy.basepoint(2)[None, None], 2, axis=0).repeat(2, axis=1)
    lift = np.broadcast_to(np.eye(2, dtype=complex), states.shape).copy()
    lift[1, 1] = np.diag([0.0, 1.0])
    grid = HomotopyGrid(t_params=[0.0, 1.0], s_params=[0.0, 1.0], states=states, lift=lift)
    cells = homotopy.cell_deviations(grid)
    assert cells[1, 1] == np.inf
    assert cells[0, 1] == 0.0
    report = homotopy.verify_homotopy(grid)
    assert not report.passed
    assert report.worst_cell == (1, 1)


def test_verify_reports_wrong_target(bloch_loop):
    grid = homotopy.contract_loop_matrix(bloch_loop)
    report = homotopy.verify_homotopy(grid, target=np.diag([0.0, 1.0]))
    assert not report.passed
    assert report.final_deviation == pytest.approx(np.sqrt(2), abs=1e-5)


def test_verify_detects_foreign_input_path(bloch_loop):
    grid = homotopy.contract_loop_matrix(bloch_loop)
    other = sampling.great_circle_loop(7)
    report = homotopy.verify_homotopy(grid, input_path=other)
    assert report.s0_deviation > 1e-6
    assert not report.passed


def test_disentangle_two_qubits(rng):
    spec = LatticeSpec.uniform(2, 2)
    loop = sampling.random_loop(spec.total_dim, 40, rng)
    grid, site_grids, report = homotopy.disentangle_loop(loop, spec)
    assert len(site_grids) == 2
    assert [s.site for s in report.sites] == [0, 1]
    assert report.max_residual <= 1e-7
    assert report.final_deviation <= 1e-6
    assert np.allclose(grid.states[:, -1], np.kron(homotopy.basepoint(2), homotopy.basepoint(2)), atol=1e-6)


def test_disentangle_dimension_mismatch():
    with pytest.raises(DimMismatch):
        homotopy.disentangle_loop(sampling.constant_loop(3), LatticeSpec.uniform(2, 2))


def _constant_path(rho: np.ndarray, samples: int = 3) -> SampledPath:
    return SampledPath(params=np.linspace(0.0, 1.0, samples), states=np.repeat(rho[None], samples, axis=0))


def _constant_lift(path: SampledPath, u: np.ndarray) -> tuple[UnitaryPath, PhasePath]:
    unitaries = np.repeat(u.astype(complex)[None], len(path), axis=0)
    gamma = np.einsum("tij,tji->t", path.states, unitaries)
    return (
        UnitaryPath(params=path.params, unitaries=unitaries),
        PhasePath(params=path.params, phases=np.ones(len(path)), gamma=gamma),
    )


def test_interp_without_phase_hits_gelfand_ideal_halfway():
    path = _constant_path(np.diag([0.0, 1.0]).astype(complex))
    unitaries, phases = _constant_lift(path, np.diag([1.0, -1.0]))
    with pytest.raises(GelfandIdeal) as excinfo:
        homotopy.interp_unitary_homotopy(path, unitaries, phases, s_params=[0.0, 0.25, 0.5, 0.75, 1.0])
    assert excinfo.value.context["s_index"] == 2


def test_interp_flip_reaches_other_pole():
    path = _constant_path(homotopy.basepoint(2))
    unitaries, phases = _constant_lift(path, np.array([[0.0, 1.0], [1.0, 0.0]]))
    grid = homotopy.interp_unitary_homotopy(path, unitaries, phases, s_params=[0.0, 0.5, 1.0])
    assert np.allclose(grid.states[:, -1], np.diag([0.0, 1.0]), atol=1e-12)
    assert np.allclose(grid.states[:, 1], np.full((2, 2), 0.5), atol=1e-12)


def test_contract_mixed_three_level_loop(rng):
    loop = sampling.random_loop(3, 60, rng)
    purity = np.real(np.einsum("tij,tji->t", loop.states, loop.states))
    assert purity.min() < 0.99
    grid = homotopy.contract_loop_matrix(loop)
    assert homotopy.verify_homotopy(grid, tol=1e-6, input_path=loop).passed


def test_projection_stages_only_shrink_support(rng):
    loop = sampling.random_loop(3, 60, rng)
    grid = homotopy.contract_loop_matrix(loop)
    seen = set()
    for stage in grid.stages:
        match = re.search(r"projection\[n=(\d+)\]", stage.label)
        if not match:
            continue
        rank = int(match.group(1)) - 1
        seen.add(rank)
        p = np.diag([1.0] * rank + [0.0] * (3 - rank))
        after = grid.s_params >= stage.s_end - 1e-12
        weights = np.real(np.einsum("tsij,ji->ts", grid.states[:, after], p))
        assert weights.min() >= 1.0 - 1e-8
    assert seen == {1, 2}


@pytest.mark.parametrize("seed", range(50))
def test_contract_random_three_level_loops(seed):
    loop = sampling.random_loop(3, 60, make_rng(99, seed))
    grid = homotopy.contract_loop_matrix(loop)
    assert homotopy.verify_homotopy(grid, tol=1e-6, input_path=loop).passed


@pytest.mark.parametrize("index", range(50))
def test_disentangle_three_qubit_loops(index):
    spec = LatticeSpec.uniform(2, 3)
    loop = sampling.random_loop(spec.total_dim, 60, make_rng(20240917, 5, index))
    _, _, report = homotopy.disentangle_loop(loop, spec)
    assert report.max_residual <= 1e-7
    assert report.final_deviation <= 1e-6


def test_disentangle_leaves_untouched_site_trivial():
    spec = LatticeSpec.uniform(2, 2)
    site = sampling.great_circle_loop(40)
    states = np.array([np.kron(rho, homotopy.basepoint(2)) for rho in site.states])
    loop = SampledPath(params=site.params, states=states, loop=True)
    grid, site_grids, report = homotopy.disentangle_loop(loop, spec)
    assert np.allclose(site_grids[1].lift, np.eye(2))
    assert not any(stage.label.startswith("site 1") for stage in grid.stages)
    assert report.final_deviation <= 1e-6
