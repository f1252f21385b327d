"""Seeded property suite behind the ``check`` command.

Each property draws its instances from its own PCG64 stream, so results do
not depend on which other properties run. Reduced instance counts are the
default; ``full=True`` uses the acceptance counts.
"""

import logging
import time
from typing import Callable

import numpy as np

from statespace.core.errors import GelfandIdeal
from statespace.core.seeding import make_rng
from statespace.models import DensityMatrix, Isometry, LatticeSpec, PresentedMonoid, PumpParams
from statespace.schemas.reports import PropertyResult
from statespace.services import algebra, families, homotopy, phases, sampling, states

logger = logging.getLogger(__name__)

Check = Callable[[int, bool], tuple[bool, str]]


def _count(full: bool, reduced: int, acceptance: int) -> int:
    return acceptance if full else reduced


def check_action_axioms(seed: int, full: bool) -> tuple[bool, str]:
    worst_assoc, worst_purity, exact = 0.0, 0.0, True
    for i in range(_count(full, 100, 1000)):
        rng = make_rng(seed, 1, i)
        d = int(rng.integers(2, 9))
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        rho = sampling.random_density(d, rng, rank=1 if i % 2 else None)
        exact &= bool(np.array_equal(states.act(np.eye(d), rho).matrix, rho.matrix))
        joint = states.act(a @ b, rho).matrix
        nested = states.act(a, states.act(b, rho)).matrix
        worst_assoc = max(worst_assoc, float(np.linalg.norm(joint - nested)))
        if i % 2:
            worst_purity = max(worst_purity, 1.0 - float(np.sum(np.abs(states.act(a, rho).matrix) ** 2)))
    passed = exact and worst_assoc <= 1e-10 and worst_purity <= 1e-9
    return passed, f"unit exact={exact} assoc={worst_assoc:.2e} purity={worst_purity:.2e}"


def check_interpolation_instances(seed: int, full: bool) -> tuple[bool, str]:
    s = np.linspace(0.0, 1.0, 201)
    sigma3 = np.diag([1.0, -1.0]).astype(complex)
    rho = DensityMatrix.basis_state(2, 1).matrix
    lifts = s[:, None, None] * sigma3 + (1.0 - s)[:, None, None] * np.eye(2)
    norms = np.real(np.trace(lifts @ rho @ np.conj(np.swapaxes(lifts, -1, -2)), axis1=-2, axis2=-1))
    zero = np.flatnonzero(norms <= 1e-12).tolist()
    degenerate_ok = zero == [100]
    try:
        states.act(lifts[100], DensityMatrix(matrix=rho))
        degenerate_ok = False
    except GelfandIdeal:
        pass
    lowest = np.inf
    for i in range(_count(full, 20, 200)):
        rng = make_rng(seed, 2, i)
        d = int(rng.integers(2, 7))
        v = sampling.random_unitary(d, rng)[:, : int(rng.integers(1, d + 1))]
        p = v @ v.conj().T
        omega = sampling.random_density(d, rng).matrix
        ps = np.linspace(0.0, 1.0, 200)
        batch = ps[:, None, None] * p + (1.0 - ps)[:, None, None] * np.eye(d)
        image = batch @ omega @ np.conj(np.swapaxes(batch, -1, -2))
        lowest = min(lowest, float(np.min(np.real(np.trace(image, axis1=-2, axis2=-1)))))
    return degenerate_ok and lowest > 0.0, f"zero only at s=1/2: {degenerate_ok}; min projection norm={lowest:.2e}"


def check_phase_lift(seed: int, full: bool) -> tuple[bool, str]:
    t = np.linspace(0.0, 1.0, 256)
    circle = homotopy.phase_lift(np.exp(2j * np.pi * t))
    circle_dev = float(np.max(np.abs(circle.phases * circle.gamma - 1.0)))
    violations = 0
    for i in range(_count(full, 10, 100)):
        gamma = sampling.random_disk_path(64, make_rng(seed, 3, i))
        lifted = homotopy.phase_lift(gamma)
        bad_samples, bad_intervals = homotopy.check_phase_lift(lifted.gamma, lifted.phases)
        violations += len(bad_samples) + len(bad_intervals)
    passed = circle.phases.size == 256 and circle_dev <= 1e-8 and violations == 0
    return passed, f"circle deviation={circle_dev:.2e} violations={violations}"


def check_bloch_contraction(seed: int, full: bool) -> tuple[bool, str]:
    loop = sampling.great_circle_loop(200)
    grid = homotopy.contract_loop_matrix(loop)
    report = homotopy.verify_homotopy(grid, tol=1e-6, input_path=loop)
    return report.passed, f"final={report.final_deviation:.2e} consistency={report.lift_consistency:.2e}"


def check_disentangling(seed: int, full: bool) -> tuple[bool, str]:
    spec = LatticeSpec.uniform(2, 3)
    worst = 0.0
    for i in range(_count(full, 3, 50)):
        loop = sampling.random_loop(spec.total_dim, 60, make_rng(seed, 5, i))
        _, _, report = homotopy.disentangle_loop(loop, spec)
        worst = max(worst, report.max_residual, report.final_deviation)
    return worst <= 1e-7, f"worst residual={worst:.2e}"


def check_pump(seed: int, full: bool) -> tuple[bool, str]:
    L, n_w, n_t = (8, 6, 24) if full else (4, 3, 8)
    ws = sampling.fibonacci_sphere(n_w)
    _, report = families.pump_family(ws, np.linspace(-1.0, 1.0, n_t), L)
    _, gap_decoupled = families.pump_ground(PumpParams(w=(0, 0, 1), t=0.0, L=2))
    _, gap_dimer = families.pump_ground(PumpParams(w=(0, 0, 1), t=1.0, L=2))
    limits = abs(gap_decoupled - 2.0) <= 1e-9 and abs(gap_dimer - 2.0) <= 1e-9
    passed = report.min_gap > 0.1 and report.pole_deviation <= 1e-8 and limits
    return passed, f"min gap={report.min_gap:.6f} pole={report.pole_deviation:.2e} limits={limits}"


def check_chern(seed: int, full: bool) -> tuple[bool, str]:
    bundle = families.berry_bundle(24, 24)
    result = families.chern_number(bundle)
    oracle = families.curvature_chern(bundle)
    rng = make_rng(seed, 7)
    phases_ = np.exp(2j * np.pi * rng.random(bundle.frames.shape[:2]))
    redressed = bundle.model_copy(update={"frames": bundle.frames * phases_[..., None]})
    gauge = families.chern_number(redressed)
    passed = (
        abs(result.value) == 1
        and result.residual < 0.05
        and abs(oracle - result.value) < 0.05
        and gauge.value == result.value
        and abs(gauge.raw - result.raw) <= 1e-10
    )
    return passed, f"C={result.value} residual={result.residual:.2e} oracle={oracle:.4f}"


def gapped_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    magnitudes = rng.uniform(0.1, 3.0, dim)
    signs = rng.choice([-1.0, 1.0], dim)
    u = sampling.random_unitary(dim, rng)
    out = (u * (signs * magnitudes)) @ u.conj().T
    return (out + out.conj().T) / 2


def check_flattening(seed: int, full: bool) -> tuple[bool, str]:
    worst, constant, additive = 0.0, True, True
    for i in range(_count(full, 20, 100)):
        rng = make_rng(seed, 8, i)
        a = gapped_hermitian(int(rng.integers(1, 17)), rng)
        b = gapped_hermitian(int(rng.integers(1, 17)), rng)
        spectrum = np.linalg.eigvalsh(families.flatten(a, 1.0))
        worst = max(worst, float(np.max(np.abs(np.abs(spectrum) - 1.0))))
        _, crossings = families.index_along_path([families.flatten(a, t) for t in np.linspace(0, 1, 11)])
        constant &= not crossings
        additive &= families.neg_index(families.block_sum(a, b)) == families.neg_index(a) + families.neg_index(b)
    return worst <= 1e-9 and constant and additive, f"spectrum deviation={worst:.2e}"


def check_k0(seed: int, full: bool) -> tuple[bool, str]:
    naturals = PresentedMonoid(n_gens=1)
    localized = phases.localize(naturals, (1,))
    z2 = PresentedMonoid(n_gens=1, relations=(((2,), (0,)),))
    swapped = PresentedMonoid(n_gens=2, relations=(((1, 0), (0, 2)),))
    permuted = PresentedMonoid(n_gens=2, relations=(((0, 1), (2, 0)),))
    padded = PresentedMonoid(n_gens=2, relations=(((1, 0), (0, 2)), ((1, 1), (1, 1)), ((2, 1), (1, 3))))
    cases = [
        str(phases.k0(naturals)) == "Z",
        str(phases.k0(localized)) == "Z",
        phases.is_group(localized) and not phases.is_group(naturals),
        str(phases.k0(z2)) == "Z/2",
        phases.k0(swapped) == phases.k0(permuted) == phases.k0(padded),
    ]
    return all(cases), f"{sum(cases)}/{len(cases)} cases"


def _random_isometry(rng, rows: int, cols: int, input_dims=None) -> Isometry:
    m = sampling.random_unitary(rows, rng)[:, :cols]
    return Isometry(matrix=m, input_dims=input_dims or (cols,))


def check_operad(seed: int, full: bool) -> tuple[bool, str]:
    worst = 0.0
    for i in range(_count(full, 20, 200)):
        rng = make_rng(seed, 10, i)
        es = [_random_isometry(rng, 2, int(rng.integers(1, 3))) for _ in range(3)]
        d1 = _random_isometry(rng, 4, 4, (2, 2))
        d2 = _random_isometry(rng, 3, 2)
        c = _random_isometry(rng, 12, 12, (4, 3))
        worst = max(worst, algebra.operad_associativity_residual(c, [d1, d2], es))

        fs = [_random_isometry(rng, int(rng.integers(2, 4)), 2) for _ in range(3)]
        sigma = rng.permutation(3).tolist()
        g = _random_isometry(rng, 28, int(np.prod([f.rows for f in fs])))
        worst = max(worst, algebra.operad_equivariance_residual(g, fs, sigma))

        f1 = _random_isometry(rng, 4, 4, (2, 2))
        f2 = _random_isometry(rng, 3, 2)
        outer = _random_isometry(rng, 12, 12)
        rhos = [sampling.random_density(2, rng) for _ in range(3)]
        worst = max(worst, algebra.theta_compatibility_residual(outer, [f1, f2], rhos))
        worst = max(worst, algebra.operad_block_equivariance_residual(outer, [f1, f2], [[1, 0], [0]]))

        n_sites = int(rng.integers(1, 3))
        g1, g2 = _random_isometry(rng, 3, 2), _random_isometry(rng, 2, 2)
        r1 = sampling.random_density(2**n_sites, rng)
        r2 = sampling.random_density(2**n_sites, rng)
        worst = max(worst, algebra.naturality_residual(g1, g2, r1, r2, n_sites))
    return worst <= 1e-10, f"worst residual={worst:.2e}"


def check_metric(seed: int, full: bool) -> tuple[bool, str]:
    spec = LatticeSpec.uniform(2, 3)
    fam = states.observable_family(spec)
    tail_ok, triangle = True, 0.0
    for i in range(_count(full, 20, 100)):
        rng = make_rng(seed, 11, i)
        a, b = sampling.random_density(8, rng), sampling.random_density(8, rng)
        exact, _ = states.weakstar_dist(a, b, fam, len(fam))
        for K in (8, 12, 16):
            value, bound = states.weakstar_dist(a, b, fam, K)
            tail_ok &= abs(exact - value) <= bound
    for i in range(_count(full, 100, 1000)):
        rng = make_rng(seed, 12, i)
        trio = [sampling.random_density(8, rng).matrix for _ in range(3)]
        d = states.pairwise_weakstar(np.array(trio), np.array(trio[1:] + trio[:1]), fam, len(fam))
        ab, bc, ca = d
        triangle = max(triangle, float(ca - ab - bc))
    return tail_ok and triangle <= 1e-12, f"tail bound holds={tail_ok} triangle excess={triangle:.2e}"


PROPERTIES: dict[str, Check] = {
    "action-axioms": check_action_axioms,
    "interpolation": check_interpolation_instances,
    "phase-lift": check_phase_lift,
    "bloch-contraction": check_bloch_contraction,
    "disentangling": check_disentangling,
    "pump": check_pump,
    "chern": check_chern,
    "flattening": check_flattening,
    "k0": check_k0,
    "operad": check_operad,
    "metric": check_metric,
}


def run_suite(seed: int, full: bool = False, names: list[str] | None = None) -> list[PropertyResult]:
    results = []
    for name in names or list(PROPERTIES):
        check = PROPERTIES[name]
        start = time.perf_counter()
        try:
            passed, detail = check(seed, full)
        except Exception as exc:
            logger.exception("Property raised", extra={"extra_info": {"event": "CHECK", "property": name}})
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        log_context = {"event": "CHECK", "property": name, "passed": passed, "seconds": round(elapsed, 3)}
        logger.info("Property checked", extra={"extra_info": log_context})
        results.append(PropertyResult(name=name, passed=passed, detail=detail, seconds=elapsed))
    return results
