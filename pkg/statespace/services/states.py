import itertools
import logging
import math
from functools import lru_cache
from typing import Iterator

import numpy as np

from statespace.core.config import settings
from statespace.core.errors import DimMismatch, GelfandIdeal, NotSupported, SizeCap
from statespace.models import DensityMatrix, LatticeSpec, ObservableFamily, fsum_trace
from statespace.services.algebra import embed_local, eta_interleave
from statespace.services.linalg import as_matrix

logger = logging.getLogger(__name__)


def act(a, rho: DensityMatrix) -> DensityMatrix:
    """A·ω: B ↦ ω(A*BA)/ω(A*A), i.e. AρA*/tr(AρA*).

    The result is scaled to the trace of ρ itself, so 𝟙·ω returns ρ bit for bit.
    """
    m = as_matrix(a)
    if m.shape != (rho.dim, rho.dim):
        raise DimMismatch("operator and state dimensions differ", shape=m.shape, dim=rho.dim)
    image = m @ rho.matrix @ m.conj().T
    norm = fsum_trace(image)
    reference = fsum_trace(rho.matrix)
    if norm <= settings.TAU_IDEAL * reference:
        raise GelfandIdeal("operator lies in the Gelfand ideal of the state", norm=norm)
    if norm != reference:
        image = image * (reference / norm)
    return DensityMatrix(matrix=image)


def act_batch(lifts: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """Vectorized A·ω over matching leading axes; raises at the first ideal hit."""
    lifts = np.asarray(lifts, dtype=complex)
    rhos = np.asarray(rhos, dtype=complex)
    image = lifts @ rhos @ np.conj(np.swapaxes(lifts, -1, -2))
    norms = np.real(np.trace(image, axis1=-2, axis2=-1))
    references = np.real(np.trace(rhos, axis1=-2, axis2=-1))
    bad = norms <= settings.TAU_IDEAL * np.broadcast_to(references, norms.shape)
    if np.any(bad):
        index = tuple(int(i) for i in np.argwhere(bad)[0])
        raise GelfandIdeal(
            "operator lies in the Gelfand ideal of the state",
            index=list(index),
            norm=float(norms[index]),
        )
    out = image / norms[..., None, None]
    return (out + np.conj(np.swapaxes(out, -1, -2))) / 2


def expectation(rho: DensityMatrix, a) -> complex:
    return complex(np.einsum("ij,ji->", rho.matrix, as_matrix(a)))


def is_pure(rho: DensityMatrix, tol: float = 1e-9) -> bool:
    purity = float(np.sum(np.abs(rho.matrix) ** 2))
    return purity >= 1.0 - tol


def entropy(rho: DensityMatrix) -> float:
    """Von Neumann entropy with 0·ln 0 = 0."""
    values = np.clip(np.linalg.eigvalsh(rho.matrix), 0.0, None)
    values = values[values > 0.0]
    return max(0.0, float(-np.sum(values * np.log(values))))


def restrict_corner(rho: DensityMatrix, corner_dim: int) -> DensityMatrix:
    """ρ|_{P𝔄P} for the leading corner projector P of rank ``corner_dim``."""
    if not 1 <= corner_dim <= rho.dim:
        raise DimMismatch("corner dimension out of range", corner_dim=corner_dim, dim=rho.dim)
    total = fsum_trace(rho.matrix)
    block = np.array(rho.matrix[:corner_dim, :corner_dim])
    weight = fsum_trace(block)
    if weight < (1.0 - settings.CORNER_TOL) * total:
        raise NotSupported("state is not supported on the corner", weight=weight / total)
    if weight != total:
        block = block * (total / weight)
    return DensityMatrix(matrix=block)


def extend_corner(omega: DensityMatrix, ambient_dim: int) -> DensityMatrix:
    """The unique extension ω∘Ad(P) from the leading corner to M_ambient."""
    if omega.dim > ambient_dim:
        raise DimMismatch("state is larger than the ambient algebra", dim=omega.dim, ambient=ambient_dim)
    out = np.zeros((ambient_dim, ambient_dim), dtype=complex)
    out[: omega.dim, : omega.dim] = omega.matrix
    return DensityMatrix(matrix=out)


def stabilized_spec(spec: LatticeSpec, psi_dim: int, k: int) -> LatticeSpec:
    return LatticeSpec(site_dims=tuple(d * psi_dim**k for d in spec.site_dims))


def stabilize(rho: DensityMatrix, psi_site_vector, k: int, spec: LatticeSpec) -> DensityMatrix:
    """Φ applied k times: ω ↦ ω⊗ψ with ψ = ⊗_sites |ψ⟩⟨ψ| interleaved per site."""
    psi = np.asarray(psi_site_vector, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    if rho.dim != spec.total_dim:
        raise DimMismatch("state does not match the lattice", dim=rho.dim, total=spec.total_dim)
    final_dim = spec.total_dim * psi.size ** (k * spec.n_sites)
    if final_dim > settings.SIZE_CAP:
        raise SizeCap("stabilized state exceeds the size cap", dim=final_dim, cap=settings.SIZE_CAP)
    vacuum_spec = LatticeSpec.uniform(psi.size, spec.n_sites)
    site = np.outer(psi, psi.conj())
    vacuum = site
    for _ in range(spec.n_sites - 1):
        vacuum = np.kron(vacuum, site)
    vacuum_state = DensityMatrix(matrix=vacuum)
    current, current_spec = rho, spec
    for copy in range(k):
        current = eta_interleave(current, vacuum_state, current_spec, vacuum_spec)
        current_spec = stabilized_spec(spec, psi.size, copy + 1)
    return current


def gell_mann(d: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices of M_d, each scaled to unit operator norm."""
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1.0
            out.append(m)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j
            m[k, j] = 1j
            out.append(m)
    for level in range(1, d):
        diag = np.zeros(d)
        diag[:level] = 1.0
        diag[level] = -level
        diag /= np.max(np.abs(diag))
        out.append(np.diag(diag).astype(complex))
    return out


def _local_observables(site_dims: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], np.ndarray]]:
    """Regions by size then lexicographically; within a region, tensor
    products of Gell-Mann elements with a non-identity factor on every site."""
    bases = [gell_mann(d) for d in site_dims]
    for size in range(1, len(site_dims) + 1):
        for region in itertools.combinations(range(len(site_dims)), size):
            for factors in itertools.product(*(bases[s] for s in region)):
                local = factors[0]
                for f in factors[1:]:
                    local = np.kron(local, f)
                yield region, local


def family_size(spec: LatticeSpec) -> int:
    """Number of members of the complete family on ``spec``."""
    return math.prod(d * d for d in spec.site_dims) - 1


def observable_family(spec: LatticeSpec, limit: int | None = None) -> ObservableFamily:
    return _observable_family(spec.site_dims, limit)


@lru_cache(maxsize=32)
def _observable_family(site_dims: tuple[int, ...], limit: int | None) -> ObservableFamily:
    spec = LatticeSpec(site_dims=site_dims)
    observables, weights, regions = [], [], []
    for region, local in itertools.islice(_local_observables(site_dims), limit):
        observables.append(embed_local(local, region, spec))
        weights.append(len(region))
        regions.append(region)
    logger.debug(
        "Built observable family",
        extra={"extra_info": {"event": "observable_family", "site_dims": list(site_dims), "size": len(weights)}},
    )
    return ObservableFamily(
        spec=spec,
        observables=np.array(observables),
        weights=tuple(weights),
        regions=tuple(regions),
    )


def weakstar_dist(
    rho: DensityMatrix, sigma: DensityMatrix, fam: ObservableFamily, K: int
) -> tuple[float, float]:
    """Σ_{k<K} |tr((ρ−σ)A_k)| / (2^{k+1}λ_k) and the certified tail bound.

    Each omitted term is at most 2^{−k}/λ_k because |tr((ρ−σ)A)| ≤ 2 for
    ‖A‖ ≤ 1; members not materialized in ``fam`` are bounded with λ = 1.
    """
    if rho.dim != sigma.dim or rho.dim != fam.spec.total_dim:
        raise DimMismatch("states and family dimensions differ", dims=[rho.dim, sigma.dim, fam.spec.total_dim])
    values = pairwise_weakstar(rho.matrix[None], sigma.matrix[None], fam, K)
    return float(values[0]), tail_bound(fam, K)


def _weights(fam: ObservableFamily, count: int) -> np.ndarray:
    k = np.arange(count)
    return 1.0 / (2.0 ** (k + 1) * np.asarray(fam.weights[:count], dtype=float))


def tail_bound(fam: ObservableFamily, K: int) -> float:
    built = len(fam)
    rest = np.asarray(fam.weights[K:], dtype=float)
    bound = float(np.sum(2.0 ** (-np.arange(K, K + rest.size, dtype=float)) / rest)) if rest.size else 0.0
    if built < family_size(fam.spec):
        bound += 2.0 ** (1 - max(K, built))
    return bound


def pairwise_weakstar(rhos: np.ndarray, sigmas: np.ndarray, fam: ObservableFamily, K: int) -> np.ndarray:
    """Truncated distance for stacks of states with matching leading axes."""
    count = min(K, len(fam))
    diff = np.asarray(rhos) - np.asarray(sigmas)
    expect = np.einsum("...ij,kji->...k", diff, fam.observables[:count])
    return np.abs(expect) @ _weights(fam, count)


def state_family(dim: int, limit: int | None = None) -> ObservableFamily:
    """Family for the single-site algebra M_dim."""
    if dim < 2:
        raise DimMismatch("a one-dimensional algebra has no observables", dim=dim)
    return observable_family(LatticeSpec(site_dims=(dim,)), limit)


def commutant_sample(spec: LatticeSpec, site: int, count: int) -> np.ndarray:
    """The first ``count`` family members whose region avoids ``site``."""
    picked = []
    for region, local in _local_observables(spec.site_dims):
        if len(picked) >= count:
            break
        if site not in region:
            picked.append(embed_local(local, region, spec))
    if not picked:
        return np.zeros((0, spec.total_dim, spec.total_dim), dtype=complex)
    return np.array(picked)


def site_sample(spec: LatticeSpec, site: int) -> np.ndarray:
    return np.array([embed_local(b, [site], spec) for b in gell_mann(spec.site_dims[site])])
