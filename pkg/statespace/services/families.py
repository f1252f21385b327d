"""Parametrized Hamiltonian families and their invariants.

Covers the two-level Berry family over S² with its Chern number, the
alternating-field spin chain pump over S³, and spectral flattening of gapped
single-particle matrices.
"""

import logging
import math
from typing import Callable, Sequence

import numpy as np

from statespace.core.config import settings
from statespace.core.errors import DegenerateGround, DimMismatch, InvalidMatrix, NotGapped, SingularOverlap
from statespace.models import DensityMatrix, GroundBundle, LatticeSpec, PumpParams, unit_vector
from statespace.schemas.reports import ChernResult, PumpFamilyReport, PumpPoint
from statespace.services.algebra import embed_local
from statespace.services.linalg import as_matrix, check_hermitian, herm_eig, matfun
from statespace.services.states import observable_family, pairwise_weakstar
from statespace.tasks.sweeps import run_sweep

logger = logging.getLogger(__name__)

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


# Berry family


def berry_hamiltonian(w) -> np.ndarray:
    """H(w) = w₁σ¹ + w₂σ² + w₃σ³."""
    v = unit_vector(w)
    return v[0] * SIGMA[0] + v[1] * SIGMA[1] + v[2] * SIGMA[2]


def sphere_point(theta: float, phi: float) -> np.ndarray:
    w = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    return w / np.linalg.norm(w)


def ground_bundle(
    hamiltonian: Callable[[np.ndarray], np.ndarray], n_theta: int, n_phi: int, band: int = 0
) -> GroundBundle:
    """Spectral projectors of band ``band`` over θ = πi/n_theta, φ = 2πj/n_phi."""
    if n_theta < 1 or n_phi < 3:
        raise DimMismatch("S² grid needs n_theta >= 1 and n_phi >= 3", n_theta=n_theta, n_phi=n_phi)
    thetas = np.pi * np.arange(n_theta + 1) / n_theta
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    projectors, frames = [], []
    for theta in thetas:
        row_p, row_f = [], []
        for phi in phis:
            eig = herm_eig(hamiltonian(sphere_point(theta, phi)))
            values = eig.values
            if not 0 <= band < values.size:
                raise DimMismatch("band index out of range", band=band, dim=values.size)
            neighbours = [values[b] for b in (band - 1, band + 1) if 0 <= b < values.size]
            if any(abs(values[band] - x) <= settings.DELTA_GAP for x in neighbours):
                raise DegenerateGround("band is degenerate on the grid", theta=theta, phi=phi, band=band)
            v = eig.vectors[:, band]
            row_p.append(np.outer(v, v.conj()))
            row_f.append(v)
        projectors.append(row_p)
        frames.append(row_f)
    return GroundBundle(thetas=thetas, phis=phis, projectors=projectors, frames=frames, band=band)


def berry_bundle(n_theta: int = 24, n_phi: int = 24, band: int = 0) -> GroundBundle:
    return ground_bundle(berry_hamiltonian, n_theta, n_phi, band)


def _frames(bundle: GroundBundle) -> np.ndarray:
    if bundle.frames is not None:
        return bundle.frames
    p = bundle.projectors
    column = np.argmax(np.real(np.diagonal(p, axis1=-2, axis2=-1)), axis=-1)
    frames = np.take_along_axis(p, column[..., None, None], axis=-1)[..., 0]
    return frames / np.linalg.norm(frames, axis=-1, keepdims=True)


def _links(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    overlap = np.einsum("...i,...i->...", np.conj(a), b)
    modulus = np.abs(overlap)
    if np.any(modulus < settings.OVERLAP_TOL):
        where = np.argwhere(modulus < settings.OVERLAP_TOL)[0].tolist()
        raise SingularOverlap("neighbouring fibres are nearly orthogonal; refine the grid", index=where)
    return overlap / modulus


def chern_number(bundle: GroundBundle) -> ChernResult:
    """Sum of plaquette fluxes over the (θ, φ) grid, in units of 2π.

    Plaquettes run (i,j) → (i+1,j) → (i+1,j+1) → (i,j+1), oriented by the
    outward normal.
    """
    f = _frames(bundle)
    f_next_phi = np.roll(f, -1, axis=1)
    u_theta = _links(f[:-1], f[1:])
    u_phi = _links(f, f_next_phi)
    loops = u_theta * u_phi[1:] * np.conj(np.roll(u_theta, -1, axis=1)) * np.conj(u_phi[:-1])
    flux = np.angle(loops)
    raw = float(np.sum(flux) / (2 * np.pi))
    value = int(round(raw))
    logger.debug(
        "Computed Chern number",
        extra={"extra_info": {"event": "chern", "band": bundle.band, "value": value, "raw": raw}},
    )
    return ChernResult(value=value, raw=raw, residual=abs(raw - value), max_plaquette_flux=float(np.max(np.abs(flux))))


def curvature_chern(bundle: GroundBundle) -> float:
    """(1/2πi)∫ tr(P[∂_θP, ∂_φP]) dθ dφ by central differences."""
    p = bundle.projectors
    d_theta = float(bundle.thetas[1] - bundle.thetas[0])
    d_phi = 2 * np.pi / bundle.phis.size
    dp_theta = np.gradient(p, d_theta, axis=0, edge_order=2)
    dp_phi = (np.roll(p, -1, axis=1) - np.roll(p, 1, axis=1)) / (2 * d_phi)
    commutator = dp_theta @ dp_phi - dp_phi @ dp_theta
    density = np.trace(p @ commutator, axis1=-2, axis2=-1)
    weights = np.full(bundle.thetas.size, d_theta)
    weights[[0, -1]] = d_theta / 2
    total = np.sum(weights[:, None] * density) * d_phi
    return float(np.real(total / (2j * np.pi)))


# Spin chain pump


def pump_couplings(t: float) -> tuple[float, float]:
    """(g₊, g₋): g₊ = t − 1/2 on (1/2, 1], g₋ = −t − 1/2 on [−1, −1/2), zero elsewhere."""
    g_plus = t - 0.5 if t > 0.5 else 0.0
    g_minus = -t - 0.5 if t < -0.5 else 0.0
    return g_plus, g_minus


def heisenberg_pair(v: int, L: int) -> np.ndarray:
    """σ_v·σ_{v+1} on an L-site chain; the bond after the last site wraps to site 0."""
    spec = LatticeSpec.uniform(2, L)
    pair = sum(np.kron(s, s) for s in SIGMA)
    return embed_local(pair, [v, (v + 1) % L], spec)


def _bonds(p: PumpParams) -> list[int]:
    bonds = list(range(p.L - 1))
    if p.boundary == "periodic":
        bonds.append(p.L - 1)
    return bonds


def pump_hamiltonian(p: PumpParams) -> np.ndarray:
    spec = LatticeSpec.uniform(2, p.L)
    field = math.sqrt(max(0.0, 1.0 - p.t * p.t))
    local = berry_hamiltonian(p.w)
    g_plus, g_minus = pump_couplings(p.t)
    h = np.zeros((spec.total_dim, spec.total_dim), dtype=complex)
    if field:
        for v in range(p.L):
            h += (-1) ** v * field * embed_local(local, [v], spec)
    for v in _bonds(p):
        g = g_plus if v % 2 == 0 else g_minus
        if g:
            h += g * heisenberg_pair(v, p.L)
    return (h + h.conj().T) / 2


def pump_ground(p: PumpParams) -> tuple[DensityMatrix, float]:
    eig = herm_eig(pump_hamiltonian(p))
    gap = float(eig.values[1] - eig.values[0])
    if gap <= settings.DELTA_GAP:
        raise DegenerateGround("ground state is not unique", w=list(p.w), t=p.t, L=p.L, gap=gap)
    return DensityMatrix.from_vector(eig.vectors[:, 0]), gap


def pump_family(
    ws: Sequence[Sequence[float]], ts: Sequence[float], L: int, boundary: str = "periodic"
) -> tuple[np.ndarray, PumpFamilyReport]:
    """Ground states over the (w, t) grid with continuity and pole checks.

    Returns the states as an array of shape (len(ws), len(ts), 2^L, 2^L).
    """
    grid = [PumpParams(w=w, t=t, L=L, boundary=boundary) for w in ws for t in ts]
    results = run_sweep(pump_ground, grid)
    n_w, n_t = len(ws), len(ts)
    dim = 2**L
    states = np.array([rho.matrix for rho, _ in results]).reshape(n_w, n_t, dim, dim)
    gaps = np.array([gap for _, gap in results]).reshape(n_w, n_t)
    energies = [float(np.real(np.trace(rho.matrix @ pump_hamiltonian(p)))) for (rho, _), p in zip(results, grid)]

    fam = observable_family(LatticeSpec.uniform(2, L), settings.METRIC_K)
    k = settings.METRIC_K
    along_t = pairwise_weakstar(states[:, 1:], states[:, :-1], fam, k) if n_t > 1 else np.zeros((n_w, 0))
    along_w = pairwise_weakstar(states[1:], states[:-1], fam, k) if n_w > 1 else np.zeros((0, n_t))
    modulus = float(max(np.max(along_t, initial=0.0), np.max(along_w, initial=0.0)))

    pole = 0.0
    for j, t in enumerate(ts):
        if abs(t) == 1.0:
            spread = np.linalg.norm(states[:, j] - states[0, j], axis=(-2, -1))
            pole = max(pole, float(np.max(spread)))

    points = []
    for index, p in enumerate(grid):
        i, j = divmod(index, n_t)
        points.append(
            PumpPoint(
                w_index=i,
                t_index=j,
                w=p.w,
                t=p.t,
                ground_energy=energies[index],
                gap=float(gaps[i, j]),
                continuity_to_previous=float(along_t[i, j - 1]) if j > 0 else None,
            )
        )
    report = PumpFamilyReport(
        L=L,
        boundary=boundary,
        points=points,
        min_gap=float(np.min(gaps)),
        continuity_modulus=modulus,
        pole_deviation=pole,
    )
    logger.info(
        "Swept pump family",
        extra={
            "extra_info": {
                "event": "pump_family",
                "L": L,
                "points": len(points),
                "min_gap": report.min_gap,
                "continuity_modulus": modulus,
                "pole_deviation": pole,
            }
        },
    )
    return states, report


# Free-fermion flattening


def _gapped_spectrum(a) -> np.ndarray:
    values = herm_eig(a).values
    if values.size and np.min(np.abs(values)) < settings.DELTA_ADMISSIBLE:
        raise NotGapped("matrix has spectrum near zero", min_abs_eigenvalue=float(np.min(np.abs(values))))
    return values


def flatten(a, t: float) -> np.ndarray:
    """f_t(A) with f_t(x) = x/|x|^t."""
    if not 0.0 <= t <= 1.0:
        raise InvalidMatrix("flattening parameter must lie in [0, 1]", t=t)
    _gapped_spectrum(a)
    if t == 0.0:
        return check_hermitian(a)
    return matfun(a, lambda x: x / abs(x) ** t)


def neg_index(a) -> int:
    return int(np.count_nonzero(_gapped_spectrum(a) < 0))


def block_sum(a, b) -> np.ndarray:
    """A ⊕ B; empty operands are allowed."""
    blocks = []
    for m in (a, b):
        m = np.asarray(m, dtype=complex)
        if m.size == 0:
            m = m.reshape(0, 0)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidMatrix("block_sum needs square matrices", shape=list(m.shape))
        blocks.append(m)
    a, b = blocks
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=complex)
    out[: a.shape[0], : a.shape[0]] = a
    out[a.shape[0] :, a.shape[0] :] = b
    return out


def stabilize_admissible(a) -> np.ndarray:
    """A ↦ A ⊕ [1]."""
    return block_sum(a, np.ones((1, 1)))


def negative_eigenspace(a) -> np.ndarray:
    """Projector onto the (−1)-eigenspace of flatten(a, 1)."""
    flat = flatten(a, 1.0)
    out = (np.eye(flat.shape[0]) - flat) / 2
    return (out + out.conj().T) / 2


def index_along_path(mats: Sequence) -> tuple[list[int], list[int]]:
    """neg_index at every sample and the intervals where it changes."""
    indices = [neg_index(as_matrix(m)) for m in mats]
    crossings = [i for i in range(len(indices) - 1) if indices[i] != indices[i + 1]]
    if crossings:
        logger.warning(
            "Index changes along path",
            extra={"extra_info": {"event": "index_crossing", "intervals": crossings}},
        )
    return indices, crossings
