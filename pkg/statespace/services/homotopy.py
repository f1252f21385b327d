"""Loop contraction in the state space of a matrix algebra.

A homotopy is stored as a T x S grid of states H(t, s) = A_{t,s}·ω_t together
with the algebra elements A_{t,s}. Stages (unitary rotation, corner
projection, corner recursion) are built on the sampled loop and glued along
s. Whenever a stage finds two adjacent samples too far apart for its local
construction, the loop itself is bisected and every stage is rebuilt.
"""

import logging
import math
from typing import Callable, Sequence, TypeVar

import numpy as np

from statespace.core.config import settings
from statespace.core.errors import (
    DimMismatch,
    DomainError,
    FactorizationFailure,
    GelfandIdeal,
    InvalidMatrix,
    InvalidState,
    RefinementExhausted,
    VerificationFailed,
)
from statespace.models import (
    DensityMatrix,
    HomotopyGrid,
    LatticeSpec,
    PhasePath,
    SampledPath,
    StageInfo,
    UnitaryPath,
)
from statespace.schemas.reports import FactorizationReport, SiteFactorization, VerificationReport
from statespace.services.linalg import as_matrix, partial_trace
from statespace.services.states import (
    act_batch,
    commutant_sample,
    observable_family,
    pairwise_weakstar,
    restrict_corner,
    site_sample,
    state_family,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

BASEPOINT_TOL = 1e-9
FINAL_TOL = 1e-6


class _RefinementRequest(Exception):
    """Raised by a stage when the listed t-intervals must be bisected."""

    def __init__(self, intervals: Sequence[int], reason: str):
        super().__init__(reason)
        self.intervals = sorted({int(i) for i in intervals})
        self.reason = reason


def basepoint(n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=complex)
    out[0, 0] = 1.0
    return out


def _leading_projector(n: int, rank: int) -> np.ndarray:
    return np.diag(np.r_[np.ones(rank), np.zeros(n - rank)]).astype(complex)


# Refinement


def _bisect(params: np.ndarray, values: np.ndarray, depth: np.ndarray, intervals: Sequence[int]):
    """Insert the convex midpoint into each listed interval."""
    marked = set(intervals)
    new_params, new_values, new_depth = [params[0]], [values[0]], []
    for i in range(params.size - 1):
        if i in marked:
            level = int(depth[i]) + 1
            if level > settings.REFINE_DEPTH:
                raise RefinementExhausted(
                    "adaptive subdivision exceeded the depth cap",
                    interval=i,
                    depth=level,
                    samples=int(params.size),
                )
            new_params.append((params[i] + params[i + 1]) / 2)
            new_values.append((values[i] + values[i + 1]) / 2)
            new_depth.extend([level, level])
        else:
            new_depth.append(int(depth[i]))
        new_params.append(params[i + 1])
        new_values.append(values[i + 1])
    return np.array(new_params), np.array(new_values), np.array(new_depth, dtype=int)


def _refining(
    params: np.ndarray, values: np.ndarray, build: Callable[[np.ndarray, np.ndarray], T], event: str
) -> tuple[np.ndarray, np.ndarray, T, int]:
    """Run ``build`` until it stops asking for refinement."""
    params = np.asarray(params, dtype=float)
    values = np.asarray(values)
    depth = np.zeros(params.size - 1, dtype=int)
    rounds = 0
    while True:
        try:
            result = build(params, values)
        except _RefinementRequest as request:
            rounds += 1
            logger.debug(
                "Refining sampled path",
                extra={
                    "extra_info": {
                        "event": event,
                        "round": rounds,
                        "intervals": len(request.intervals),
                        "samples": int(params.size),
                        "reason": request.reason,
                    }
                },
            )
            params, values, depth = _bisect(params, values, depth, request.intervals)
            continue
        return params, values, result, rounds


def refine_path(path: SampledPath, intervals: Sequence[int]) -> SampledPath:
    """Bisect the given intervals of ``path`` by convex midpoints."""
    bad = [i for i in intervals if not 0 <= i < len(path) - 1]
    if bad:
        raise DimMismatch("interval index out of range", intervals=bad, samples=len(path))
    depth = np.zeros(len(path) - 1, dtype=int)
    params, states, _ = _bisect(path.params, path.states, depth, intervals)
    return SampledPath(params=params, states=states, loop=path.loop)


# Phase lifting


def _phase_steps(gamma: np.ndarray) -> np.ndarray:
    radius = settings.INTERIOR_RADIUS
    edge = 1.0 - settings.DELTA_EDGE
    r = np.abs(gamma)
    phases = np.ones(gamma.size, dtype=complex)
    if r[0] >= edge:
        phases[0] = r[0] / gamma[0]
    alpha = float(np.angle(phases[0] * gamma[0])) if r[0] > 0 else 0.0
    for i in range(1, gamma.size):
        w = gamma[i]
        if r[i] >= edge:
            phases[i] = r[i] / w
            alpha = 0.0
        elif r[i] <= radius or r[i - 1] <= radius:
            phases[i] = phases[i - 1]
            alpha = float(np.angle(phases[i] * w)) if r[i] > 0 else 0.0
        else:
            if alpha != 0.0:
                alpha *= (1.0 - r[i]) / (1.0 - r[i - 1])
            phases[i] = np.exp(1j * alpha) * r[i] / w
    return phases


def check_phase_lift(gamma, phases) -> tuple[list[int], list[int]]:
    """Samples violating the edge dichotomy and intervals with a phase jump."""
    gamma = np.asarray(gamma, dtype=complex)
    phases = np.asarray(phases, dtype=complex)
    edge = 1.0 - settings.DELTA_EDGE
    at_edge = np.abs(gamma) >= edge
    miss = np.abs(phases * gamma - 1.0) > settings.EPS_EDGE + 1e-15
    bad_samples = np.flatnonzero(at_edge & miss).tolist()
    jumps = np.abs(np.angle(phases[1:] / phases[:-1]))
    bad_intervals = np.flatnonzero(jumps > settings.THETA_STEP).tolist()
    return bad_samples, bad_intervals


def _phase_or_refine(gamma: np.ndarray) -> np.ndarray:
    phases = _phase_steps(gamma)
    bad_samples, bad_intervals = check_phase_lift(gamma, phases)
    if bad_samples or bad_intervals:
        around = {j for i in bad_samples for j in (i - 1, i) if 0 <= j < gamma.size - 1}
        raise _RefinementRequest(around.union(bad_intervals), "phase step")
    return phases


def phase_lift(gamma, params=None) -> PhasePath:
    """Unit-modulus λ with λγ = 1 on the edge of the disk and small steps.

    ``gamma`` is refined by midpoints where needed; the returned path carries
    the refined samples next to the phases.
    """
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    if gamma.size < 2:
        raise InvalidState("a sampled path needs at least two samples")
    if np.any(np.abs(gamma) > 1.0 + 1e-10):
        raise DomainError("phase lifting needs a path in the closed unit disk", max_modulus=float(np.max(np.abs(gamma))))
    params = np.linspace(0.0, 1.0, gamma.size) if params is None else np.asarray(params, dtype=float)
    if params.size != gamma.size:
        raise DimMismatch("one parameter per sample is required", params=params.size, samples=gamma.size)
    params, gamma, phases, rounds = _refining(params, gamma, lambda _, g: _phase_or_refine(g), "phase_lift")
    logger.debug(
        "Lifted phases",
        extra={"extra_info": {"event": "phase_lift", "samples": int(gamma.size), "rounds": rounds}},
    )
    return PhasePath(params=params, phases=phases, gamma=gamma)


# Unitary lifting


def _rotation_to_e0(v: np.ndarray, theta: float, angle: float) -> np.ndarray:
    """Rotation by ``angle`` in the plane of e0 and v, moving v toward e0.

    ``v`` is a unit vector with ⟨e0, v⟩ = cos(theta) ≥ 0.
    """
    n = v.size
    sin_theta = math.sin(theta)
    if sin_theta < 1e-15 or angle == 0.0:
        return np.eye(n, dtype=complex)
    e0 = np.zeros(n, dtype=complex)
    e0[0] = 1.0
    u = (v - math.cos(theta) * e0) / sin_theta
    u = u / np.linalg.norm(u)
    plane = np.outer(e0, e0.conj()) + np.outer(u, u.conj())
    turn = np.outer(e0, u.conj()) - np.outer(u, e0.conj())
    return np.eye(n, dtype=complex) + (math.cos(angle) - 1.0) * plane + math.sin(angle) * turn


def _gap_weight(gap: float) -> float:
    if gap < settings.EPS_DEG:
        return 0.0
    return min(1.0, gap / settings.GAP_RAMP)


def _pin_weight(t: float) -> float:
    """0 away from t = 1, rising linearly to 1 across the last PIN_WINDOW."""
    window = settings.PIN_WINDOW
    return min(1.0, max(0.0, (t - (1.0 - window)) / window))


def _unitaries(params: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Gauge-tracked unitaries rotating the top eigenvector of ρ_t toward e0.

    The tracked frame follows the top eigenvector at a speed bounded by
    ROTATION_RATE per unit t, scaled down as the top gap closes and frozen
    below EPS_DEG. The returned U_t additionally closes the remaining angle
    by the pin weight, so U_1 fixes |e0⟩⟨e0| exactly. Both are functions of
    t along the loop, independent of how densely it is sampled.
    """
    count, n = states.shape[0], states.shape[1]
    if n == 1:
        return np.ones((count, 1, 1), dtype=complex)
    values, vectors = np.linalg.eigh(states)
    unitaries = np.empty_like(states)
    current = np.eye(n, dtype=complex)
    for t in range(count):
        v = current @ vectors[t, :, -1]
        c = abs(v[0])
        if c > 0:
            v = v * (np.conj(v[0]) / c)
        theta = math.acos(min(1.0, c))
        weight = _gap_weight(float(values[t, -1] - values[t, -2]))
        dt = float(params[t] - params[t - 1]) if t else 0.0
        step = min(theta, weight * settings.ROTATION_RATE * dt)
        pinned = step + weight * _pin_weight(float(params[t])) * (theta - step)
        unitaries[t] = _rotation_to_e0(v, theta, pinned) @ current
        current = _rotation_to_e0(v, theta, step) @ current
    bad = _unitary_violations(states, unitaries, values, vectors)
    if bad:
        raise _RefinementRequest(bad, "unitary lift")
    return unitaries


def _unitary_violations(states, unitaries, values=None, vectors=None) -> set[int]:
    count, n = states.shape[0], states.shape[1]
    if values is None:
        values, vectors = np.linalg.eigh(states)
    rotated = unitaries @ states @ np.conj(np.swapaxes(unitaries, -1, -2))
    bad: set[int] = set()
    last = np.real(rotated[:, n - 1, n - 1])
    off_base = np.linalg.norm(rotated - basepoint(n), axis=(-2, -1))
    for t in np.flatnonzero((1.0 - last <= settings.DELTA_P) & (off_base >= settings.DELTA_PURE)):
        bad.update(j for j in (t - 1, t) if 0 <= j < count - 1)
    nearly_pure = values[:, -1] > 1.0 - settings.DELTA_NB
    overlap = np.abs(np.einsum("ti,ti->t", np.conj(vectors[:-1, :, -1]), vectors[1:, :, -1])) ** 2
    for t in np.flatnonzero(nearly_pure[:-1] & nearly_pure[1:] & (overlap <= 1.0 - settings.DELTA_NB)):
        bad.add(int(t))
    steps = np.linalg.norm(unitaries[1:] - unitaries[:-1], axis=(-2, -1))
    bad.update(np.flatnonzero(steps > settings.ETA_STEP).tolist())
    return bad


def check_unitary_lift(loop: SampledPath, unitaries: UnitaryPath) -> list[int]:
    """Intervals of ``loop`` on which the lift breaks one of its conditions."""
    if unitaries.unitaries.shape[0] != len(loop):
        raise DimMismatch("one unitary per sample is required", samples=len(loop), unitaries=unitaries.unitaries.shape[0])
    bad = _unitary_violations(loop.states, unitaries.unitaries)
    n = loop.dim
    for t in (0, len(loop) - 1):
        u = unitaries.unitaries[t]
        rotated = u @ basepoint(n) @ u.conj().T
        if np.linalg.norm(rotated - basepoint(n)) > 1e-8:
            bad.add(min(t, len(loop) - 2))
    return sorted(int(i) for i in bad)


def _check_based_loop(loop: SampledPath) -> None:
    if not loop.loop:
        raise InvalidState("a loop is required")
    base = basepoint(loop.dim)
    deviation = max(float(np.linalg.norm(loop.states[i] - base)) for i in (0, -1))
    if deviation > BASEPOINT_TOL:
        raise InvalidState("loop is not based at |e0⟩⟨e0|", deviation=deviation)


def unitary_lift(loop: SampledPath) -> tuple[SampledPath, UnitaryPath]:
    """Unitaries U_t along the (possibly refined) loop, returned with it."""
    _check_based_loop(loop)
    params, states, unitaries, rounds = _refining(
        loop.params, loop.states, _unitaries, "unitary_lift"
    )
    logger.debug(
        "Lifted loop to unitaries",
        extra={"extra_info": {"event": "unitary_lift", "samples": int(params.size), "rounds": rounds}},
    )
    refined = loop if rounds == 0 else SampledPath(params=params, states=states, loop=True)
    return refined, UnitaryPath(params=params, unitaries=unitaries)


# Stage grids


def _s_axis(s_params) -> np.ndarray:
    if s_params is None:
        return np.linspace(0.0, 1.0, settings.STAGE_SAMPLES)
    return np.asarray(s_params, dtype=float)


def _grid_from_lifts(states: np.ndarray, lifts: np.ndarray, t_params, s_params, label: str) -> HomotopyGrid:
    """Act with ``lifts`` (T, S, n, n) on the column ``states``; column 0 is kept verbatim."""
    out = np.empty(lifts.shape, dtype=complex)
    out[:, 0] = states
    try:
        out[:, 1:] = act_batch(lifts[:, 1:], states[:, None])
    except GelfandIdeal as exc:
        t, s = exc.context.get("index", [None, None])[:2]
        raise GelfandIdeal(
            f"{label} stage hit the Gelfand ideal",
            t_index=t,
            s_index=None if s is None else s + 1,
            norm=exc.context.get("norm"),
        ) from exc
    return HomotopyGrid(
        t_params=t_params,
        s_params=s_params,
        states=out,
        lift=lifts,
        stages=(StageInfo(label=label, s_start=0.0, s_end=1.0),),
    )


def interp_unitary_homotopy(
    loop: SampledPath, unitaries: UnitaryPath, phases: PhasePath, s_params=None
) -> HomotopyGrid:
    """Lift (t, s) ↦ sλ_tU_t + (1−s)𝟙."""
    count, n = len(loop), loop.dim
    if unitaries.unitaries.shape != (count, n, n) or phases.phases.shape != (count,):
        raise DimMismatch(
            "loop, unitaries and phases must share their samples",
            samples=count,
            unitaries=list(unitaries.unitaries.shape),
            phases=list(phases.phases.shape),
        )
    s = _s_axis(s_params)
    scaled = phases.phases[:, None, None] * unitaries.unitaries
    lifts = s[None, :, None, None] * scaled[:, None] + (1.0 - s)[None, :, None, None] * np.eye(n)
    lifts[:, 0] = np.eye(n)
    return _grid_from_lifts(loop.states, lifts, loop.params, s, f"unitary[n={n}]")


def _check_projector(p) -> np.ndarray:
    p = as_matrix(p, "projector")
    if np.linalg.norm(p - p.conj().T) > 1e-10 or np.linalg.norm(p @ p - p) > 1e-10:
        raise InvalidMatrix("not an orthogonal projector")
    return p


def project_homotopy(path: SampledPath, p, s_params=None) -> HomotopyGrid:
    """Lift (t, s) ↦ sP + (1−s)𝟙."""
    p = _check_projector(p)
    n = path.dim
    if p.shape != (n, n):
        raise DimMismatch("projector and states differ in dimension", projector=list(p.shape), dim=n)
    weights = np.real(np.einsum("tij,ji->t", path.states, p))
    low = np.flatnonzero(weights <= settings.DELTA_P)
    if low.size:
        raise GelfandIdeal(
            "projector has vanishing expectation on the path",
            t_index=int(low[0]),
            expectation=float(weights[low[0]]),
        )
    s = _s_axis(s_params)
    lifts = s[None, :, None, None] * p + (1.0 - s)[None, :, None, None] * np.eye(n)
    lifts = np.broadcast_to(lifts, (len(path), s.size, n, n)).copy()
    lifts[:, 0] = np.eye(n)
    return _grid_from_lifts(path.states, lifts, path.params, s, f"projection[n={n}]")


def restrict_path(path: SampledPath, corner_dim: int) -> SampledPath:
    states = np.array([restrict_corner(DensityMatrix(matrix=rho), corner_dim).matrix for rho in path.states])
    return SampledPath(params=path.params, states=states, loop=path.loop)


def pushforward_homotopy(grid: HomotopyGrid, ambient_dim: int) -> HomotopyGrid:
    """Move a corner homotopy into M_ambient: lifts (𝟙−P) + A, states padded by zeros."""
    k = grid.dim
    if k > ambient_dim:
        raise DimMismatch("corner is larger than the ambient algebra", corner=k, ambient=ambient_dim)
    shape = grid.states.shape[:2] + (ambient_dim, ambient_dim)
    states = np.zeros(shape, dtype=complex)
    states[..., :k, :k] = grid.states
    lifts = np.zeros(shape, dtype=complex)
    lifts[..., :k, :k] = grid.lift
    lifts[..., k:, k:] = np.eye(ambient_dim - k)
    return HomotopyGrid(
        t_params=grid.t_params,
        s_params=grid.s_params,
        states=states,
        lift=lifts,
        final_column_exempt=grid.final_column_exempt,
        stages=grid.stages,
    )


def trivial_grid(path: SampledPath) -> HomotopyGrid:
    n = path.dim
    states = np.repeat(path.states[:, None], 2, axis=1)
    lifts = np.broadcast_to(np.eye(n, dtype=complex), states.shape).copy()
    return HomotopyGrid(t_params=path.params, s_params=[0.0, 1.0], states=states, lift=lifts)


def concatenate_homotopies(grids: Sequence[HomotopyGrid]) -> HomotopyGrid:
    """Glue stages along s, each on a uniform slot of [0, 1].

    Stage j's lift is composed with the normalized final lift of the stages
    before it, so the glued lift still acts on the column s = 0.
    """
    if not grids:
        raise DimMismatch("nothing to concatenate")
    first = grids[0]
    for grid in grids[1:]:
        if grid.states.shape[0] != first.states.shape[0] or grid.dim != first.dim:
            raise DimMismatch("stages must share their t samples and dimension")
        if not np.allclose(grid.t_params, first.t_params, rtol=0.0, atol=1e-15):
            raise DimMismatch("stages must share their t samples")
    count, n = first.states.shape[0], first.dim
    rho0 = first.states[:, 0]
    ref = np.real(np.trace(rho0, axis1=-2, axis2=-1))
    slots = len(grids)
    s_params, states, lifts, stages = [], [], [], []
    prefix = np.broadcast_to(np.eye(n, dtype=complex), (count, n, n))
    for j, grid in enumerate(grids):
        keep = slice(0, None) if j == 0 else slice(1, None)
        s_params.extend((j + grid.s_params[keep]) / slots)
        states.append(grid.states[:, keep])
        composite = grid.lift[:, keep] if j == 0 else grid.lift[:, keep] @ prefix[:, None]
        lifts.append(composite)
        for info in grid.stages or (StageInfo(label=f"stage {j}", s_start=0.0, s_end=1.0),):
            stages.append(
                StageInfo(label=info.label, s_start=(j + info.s_start) / slots, s_end=(j + info.s_end) / slots)
            )
        end = grid.lift[:, -1] @ prefix
        image = end @ rho0 @ np.conj(np.swapaxes(end, -1, -2))
        norms = np.real(np.trace(image, axis1=-2, axis2=-1)) / ref
        prefix = end / np.sqrt(norms)[:, None, None]
    s_axis = np.array(s_params)
    s_axis[0], s_axis[-1] = 0.0, 1.0
    return HomotopyGrid(
        t_params=first.t_params,
        s_params=s_axis,
        states=np.concatenate(states, axis=1),
        lift=np.concatenate(lifts, axis=1),
        final_column_exempt=grids[-1].final_column_exempt,
        stages=tuple(stages),
    )


# Contraction


def _is_constant_basepoint(states: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.all(np.linalg.norm(states - basepoint(states.shape[1]), axis=(-2, -1)) <= tol))


def _contract_corner(params: np.ndarray, states: np.ndarray) -> list[HomotopyGrid]:
    """Stage grids contracting a based loop in M_m; empty when already constant."""
    m = states.shape[1]
    if m == 1 or _is_constant_basepoint(states):
        return []
    unitaries = _unitaries(params, states)
    gamma = np.einsum("tij,tji->t", states, unitaries)
    phases = _phase_or_refine(gamma)
    path = SampledPath(params=params, states=states)
    rotate = interp_unitary_homotopy(
        path,
        UnitaryPath(params=params, unitaries=unitaries),
        PhasePath(params=params, phases=phases, gamma=gamma),
    )
    project = project_homotopy(SampledPath(params=params, states=rotate.states[:, -1]), _leading_projector(m, m - 1))
    corner = project.states[:, -1, : m - 1, : m - 1]
    inner = _contract_corner(params, corner)
    return [rotate, project] + [pushforward_homotopy(g, m) for g in inner]


def contract_loop_matrix(loop: SampledPath, n: int | None = None) -> HomotopyGrid:
    """Null-homotopy of a loop in 𝒮(M_n) based at |e0⟩⟨e0|."""
    n = loop.dim if n is None else n
    if n != loop.dim:
        raise DimMismatch("loop dimension differs from n", n=n, dim=loop.dim)
    _check_based_loop(loop)
    params, states, stages, rounds = _refining(loop.params, loop.states, _contract_corner, "contract_loop")
    if not stages:
        grid = trivial_grid(loop if rounds == 0 else SampledPath(params=params, states=states, loop=True))
    else:
        grid = concatenate_homotopies(stages)
    deviation = float(np.max(np.linalg.norm(grid.states[:, -1] - basepoint(n), axis=(-2, -1))))
    logger.info(
        "Contracted loop",
        extra={
            "extra_info": {
                "event": "contract_loop",
                "n": n,
                "samples": int(params.size),
                "refinements": rounds,
                "stages": len(stages),
                "final_deviation": deviation,
            }
        },
    )
    if deviation > FINAL_TOL:
        raise VerificationFailed("final column is not the basepoint", deviation=deviation)
    return grid


def _embed_site_batch(lifts: np.ndarray, spec: LatticeSpec, site: int) -> np.ndarray:
    """𝟙 ⊗ B ⊗ 𝟙 with B on ``site``, for a (T, S, k, k) stack."""
    left = math.prod(spec.site_dims[:site])
    right = math.prod(spec.site_dims[site + 1 :])
    t, s = lifts.shape[:2]
    full = np.einsum("ab,tsij,cd->tsaicbjd", np.eye(left), lifts, np.eye(right))
    return full.reshape(t, s, spec.total_dim, spec.total_dim)


def _factorization(states: np.ndarray, spec: LatticeSpec, site: int) -> SiteFactorization:
    purity = 0.0
    for j in range(site + 1):
        base = basepoint(spec.site_dims[j])
        marginals = np.array([partial_trace(rho, spec, [j]) for rho in states])
        purity = max(purity, float(np.max(np.linalg.norm(marginals - base, axis=(-2, -1)))))
    a = commutant_sample(spec, site, settings.FACTORIZATION_SAMPLES)
    b = site_sample(spec, site)
    residual = 0.0
    if a.shape[0]:
        ea = np.einsum("tij,aji->ta", states, a)
        eb = np.einsum("tij,bji->tb", states, b)
        eab = np.einsum("tij,ajk,bki->tab", states, a, b)
        residual = float(np.max(np.abs(eab - ea[:, :, None] * eb[:, None, :])))
    return SiteFactorization(
        site=site,
        purity_deviation=purity,
        factorization_residual=residual,
        commutant_samples=int(a.shape[0]),
        site_samples=int(b.shape[0]),
    )


def disentangle_loop(
    loop: SampledPath, spec: LatticeSpec
) -> tuple[HomotopyGrid, list[HomotopyGrid], FactorizationReport]:
    """Contract a loop based at ⊗|e0⟩⟨e0| one site at a time.

    Returns the global grid, the per-site grids on the site algebras and the
    factorization report collected after every site.
    """
    if loop.dim != spec.total_dim:
        raise DimMismatch("loop does not match the lattice", dim=loop.dim, total=spec.total_dim)
    _check_based_loop(loop)

    def build(params: np.ndarray, states: np.ndarray):
        current = states
        stages, site_grids, sites = [], [], []
        for i in range(spec.n_sites):
            local = np.array([partial_trace(rho, spec, [i]) for rho in current])
            local_stages = _contract_corner(params, local)
            if local_stages:
                site_grids.append(concatenate_homotopies(local_stages))
            else:
                site_grids.append(trivial_grid(SampledPath(params=params, states=local)))
            for grid in local_stages:
                lifts = _embed_site_batch(grid.lift, spec, i)
                full = np.empty(lifts.shape, dtype=complex)
                full[:, 0] = current
                full[:, 1:] = act_batch(lifts[:, 1:], current[:, None])
                stages.append(
                    HomotopyGrid(
                        t_params=params,
                        s_params=grid.s_params,
                        states=full,
                        lift=lifts,
                        stages=tuple(
                            StageInfo(label=f"site {i}: {info.label}", s_start=info.s_start, s_end=info.s_end)
                            for info in grid.stages
                        ),
                    )
                )
                current = full[:, -1]
            report = _factorization(current, spec, i)
            sites.append(report)
            if max(report.purity_deviation, report.factorization_residual) > settings.FACTORIZATION_FAIL:
                raise FactorizationFailure(
                    "state does not factorize after the site stage",
                    site=i,
                    purity_deviation=report.purity_deviation,
                    residual=report.factorization_residual,
                )
        return stages, site_grids, sites

    params, states, (stages, site_grids, sites), rounds = _refining(
        loop.params, loop.states, build, "disentangle"
    )
    if stages:
        grid = concatenate_homotopies(stages)
    else:
        grid = trivial_grid(loop if rounds == 0 else SampledPath(params=params, states=states, loop=True))
    deviation = float(np.max(np.linalg.norm(grid.states[:, -1] - _product_basepoint(spec), axis=(-2, -1))))
    report = FactorizationReport(sites=sites, final_deviation=deviation, refinements=rounds)
    logger.info(
        "Disentangled loop",
        extra={
            "extra_info": {
                "event": "disentangle",
                "site_dims": list(spec.site_dims),
                "samples": int(params.size),
                "refinements": rounds,
                "max_residual": report.max_residual,
                "final_deviation": deviation,
            }
        },
    )
    if deviation > FINAL_TOL:
        raise VerificationFailed("final column is not the product basepoint", deviation=deviation)
    return grid, site_grids, report


def _product_basepoint(spec: LatticeSpec) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for d in spec.site_dims:
        out = np.kron(out, basepoint(d))
    return out


# Verification


def cell_deviations(grid: HomotopyGrid) -> np.ndarray:
    """‖H(t,s) − A_{t,s}·H(t,0)‖ per cell; infinite where the lift hits the ideal."""
    column = grid.states[:, 0][:, None]
    image = grid.lift @ column @ np.conj(np.swapaxes(grid.lift, -1, -2))
    norms = np.real(np.trace(image, axis1=-2, axis2=-1))
    refs = np.real(np.trace(column, axis1=-2, axis2=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        predicted = image / norms[..., None, None]
        out = np.linalg.norm(grid.states - predicted, axis=(-2, -1))
    out[norms <= settings.TAU_IDEAL * refs] = np.inf
    if grid.final_column_exempt:
        out[:, -1] = 0.0
    return out


def continuity_modulus(grid: HomotopyGrid, spec: LatticeSpec | None = None) -> float:
    """Largest truncated weak* distance between neighbouring cells."""
    n = grid.dim
    if n < 2:
        return 0.0
    if spec is not None and spec.total_dim == n:
        fam = observable_family(spec, settings.CONTINUITY_K)
    else:
        fam = state_family(n, settings.CONTINUITY_K)
    k = settings.CONTINUITY_K
    along_t = pairwise_weakstar(grid.states[1:], grid.states[:-1], fam, k)
    along_s = pairwise_weakstar(grid.states[:, 1:], grid.states[:, :-1], fam, k)
    return float(max(np.max(along_t, initial=0.0), np.max(along_s, initial=0.0)))


def verify_homotopy(
    grid: HomotopyGrid,
    tol: float = 1e-6,
    input_path: SampledPath | None = None,
    target=None,
    spec: LatticeSpec | None = None,
) -> VerificationReport:
    """Maximal deviations of ``grid`` from the homotopy conditions; never raises on failure."""
    n = grid.dim
    s0 = 0.0
    if input_path is not None:
        # a refined grid keeps every original sample
        rows = np.clip(np.searchsorted(grid.t_params, input_path.params), 0, grid.t_params.size - 1)
        if input_path.dim != n or not np.array_equal(grid.t_params[rows], input_path.params):
            s0 = math.inf
        else:
            s0 = float(np.max(np.linalg.norm(grid.states[rows, 0] - input_path.states, axis=(-2, -1))))
    identity = float(np.max(np.linalg.norm(grid.lift[:, 0] - np.eye(n), axis=(-2, -1))))
    cells = cell_deviations(grid)
    worst = np.unravel_index(int(np.argmax(cells)), cells.shape)
    consistency = float(cells[worst])
    base = grid.states[0, 0]
    boundary = float(
        max(
            np.max(np.linalg.norm(grid.states[0] - base, axis=(-2, -1))),
            np.max(np.linalg.norm(grid.states[-1] - base, axis=(-2, -1))),
        )
    )
    target = base if target is None else as_matrix(target, "target")
    final = float(np.max(np.linalg.norm(grid.states[:, -1] - target, axis=(-2, -1))))
    modulus = continuity_modulus(grid, spec)
    passed = max(s0, identity, consistency, boundary, final) <= tol and modulus <= settings.CONTINUITY_BOUND
    report = VerificationReport(
        passed=passed,
        tol=tol,
        t_samples=grid.states.shape[0],
        s_samples=grid.states.shape[1],
        s0_deviation=s0,
        lift_identity_deviation=identity,
        lift_consistency=consistency,
        worst_cell=(int(worst[0]), int(worst[1])) if consistency > tol else None,
        boundary_deviation=boundary,
        final_deviation=final,
        continuity_modulus=modulus,
        continuity_bound=settings.CONTINUITY_BOUND,
    )
    logger.debug("Verified homotopy", extra={"extra_info": {"event": "verify", **report.model_dump()}})
    return report
