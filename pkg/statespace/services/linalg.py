import logging
import math
from typing import Callable, Iterable, Sequence

import numpy as np

from statespace.core.config import settings
from statespace.core.errors import (
    BadSiteSet,
    DimMismatch,
    DomainError,
    InvalidMatrix,
    NoConvergence,
    NotHermitian,
)
from statespace.models import HermitianEig, LatticeSpec

logger = logging.getLogger(__name__)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise InvalidMatrix(f"{name} must be two-dimensional", shape=m.shape)
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    return m


def check_hermitian(a, tol: float | None = None) -> np.ndarray:
    """Return the Hermitian part of ``a`` after checking ‖a − a*‖ ≤ τ‖a‖."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise NotHermitian("matrix is not square", shape=m.shape)
    tol = settings.TAU_HERM if tol is None else tol
    norm = float(np.linalg.norm(m))
    deviation = float(np.linalg.norm(m - m.conj().T))
    if deviation > tol * max(norm, 1e-300) and deviation > 0.0:
        raise NotHermitian(
            "matrix is not Hermitian within tolerance",
            deviation=deviation,
            norm=norm,
        )
    return (m + m.conj().T) / 2


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def herm_eig(a, method: str | None = None) -> HermitianEig:
    """Canonical eigendecomposition of a Hermitian matrix.

    Eigenvalues ascend. Inside clusters closer than DEGENERACY_GAP the basis is
    rebuilt by ordered Gram–Schmidt of projected standard basis vectors, and a
    non-degenerate eigenvector is phased so its largest-modulus entry is real
    positive; identical input therefore gives identical output.
    """
    m = check_hermitian(a)
    method = method or settings.EIG_METHOD
    if m.shape[0] == 0:
        return HermitianEig(values=np.zeros(0), vectors=np.zeros((0, 0)))
    if method == "jacobi":
        values, vectors = _jacobi(m)
    else:
        try:
            values, vectors = np.linalg.eigh(m)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("LAPACK eigensolver did not converge", dim=m.shape[0]) from exc
    values, vectors = _canonicalize(values, vectors)
    return HermitianEig(values=values, vectors=vectors)


def jacobi_eig(a) -> HermitianEig:
    return herm_eig(a, method="jacobi")


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint (p, q) pairings covering every pair once per sweep."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if max(p, q) < n]
        first = np.array([p for p, _ in pairs], dtype=int)
        second = np.array([q for _, q in pairs], dtype=int)
        rounds.append((first, second))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi rotations until the off-diagonal mass is negligible.

    Each sweep visits every pair once, in round-robin rounds of disjoint
    pairs that are rotated together.
    """
    a = m.copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return np.zeros(n), v
    threshold = settings.JACOBI_TOL * scale
    rounds = _round_robin(n)
    for sweep in range(settings.JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < threshold:
            logger.debug(
                "Jacobi converged",
                extra={"extra_info": {"event": "jacobi_converged", "dim": n, "sweeps": sweep}},
            )
            return np.real(np.diag(a)).copy(), v
        for p, q in rounds:
            b = a[p, q]
            size = np.abs(b)
            live = size > 1e-300
            phase = np.where(live, b / np.where(live, size, 1.0), 1.0)
            theta = np.where(live, 0.5 * np.arctan2(2.0 * size, a[p, p].real - a[q, q].real), 0.0)
            theta = np.where(theta > np.pi / 4, theta - np.pi / 2, theta)
            c, s = np.cos(theta), np.sin(theta)
            # D = diag(1, conj(phase)) makes each pair entry real, G rotates it away
            col_p, col_q = a[:, p], a[:, q]
            a[:, p] = col_p * c + col_q * (s * np.conj(phase))
            a[:, q] = col_q * (c * np.conj(phase)) - col_p * s
            row_p, row_q = a[p, :], a[q, :]
            a[p, :] = c[:, None] * row_p + (s * phase)[:, None] * row_q
            a[q, :] = (c * phase)[:, None] * row_q - s[:, None] * row_p
            vec_p, vec_q = v[:, p], v[:, q]
            v[:, p] = vec_p * c + vec_q * (s * np.conj(phase))
            v[:, q] = vec_q * (c * np.conj(phase)) - vec_p * s
            a[p, q] = a[q, p] = 0.0
            a[p, p] = a[p, p].real
            a[q, q] = a[q, q].real
    raise NoConvergence(
        "Jacobi iteration exceeded the sweep cap",
        dim=n,
        sweeps=settings.JACOBI_MAX_SWEEPS,
    )


def _canonicalize(values: np.ndarray, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(values, kind="stable")
    values = np.asarray(values, dtype=float)[order]
    vectors = np.asarray(vectors, dtype=complex)[:, order].copy()
    n = values.size
    gap = settings.DEGENERACY_GAP * max(1.0, float(np.max(np.abs(values))))
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and values[stop] - values[stop - 1] < gap:
            stop += 1
        if stop - start == 1:
            vectors[:, start] = _fix_phase(vectors[:, start])
        else:
            vectors[:, start:stop] = _cluster_basis(vectors[:, start:stop])
        start = stop
    return values, vectors


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (np.conj(v[k]) / abs(v[k]))


def _cluster_basis(q: np.ndarray) -> np.ndarray:
    n, m = q.shape
    accept = 1.0 / (2.0 * math.sqrt(n))
    basis: list[np.ndarray] = []
    for r in range(n):
        w = q @ np.conj(q[r, :])
        for _ in range(2):
            for b in basis:
                w = w - b * np.vdot(b, w)
        norm = float(np.linalg.norm(w))
        if norm > accept:
            basis.append(w / norm)
            if len(basis) == m:
                return np.column_stack(basis)
    # Not reachable in exact arithmetic; keep the solver's basis.
    return np.linalg.qr(q)[0]


def matfun(a, f: Callable[[float], complex]) -> np.ndarray:
    """V·diag(f(λ))·V* for Hermitian ``a``; Hermitian output when f is real."""
    eig = herm_eig(a)
    try:
        mapped = np.array([f(float(x)) for x in eig.values])
    except (ArithmeticError, ValueError) as exc:
        raise DomainError("function undefined on the spectrum", detail_error=str(exc)) from exc
    if mapped.size and not np.all(np.isfinite(mapped)):
        bad = eig.values[~np.isfinite(mapped)]
        raise DomainError("function undefined on the spectrum", eigenvalues=bad.tolist())
    out = (eig.vectors * mapped) @ eig.vectors.conj().T
    if not np.iscomplexobj(mapped) or np.all(np.imag(mapped) == 0):
        out = (out + out.conj().T) / 2
    return out


def exp_i_herm(a) -> np.ndarray:
    return matfun(a, lambda x: complex(math.cos(x), math.sin(x)))


def _site_set(sites: Iterable[int], n_sites: int) -> list[int]:
    sites = [int(s) for s in sites]
    if len(set(sites)) != len(sites):
        raise BadSiteSet("duplicate site index", sites=sites)
    if any(s < 0 or s >= n_sites for s in sites):
        raise BadSiteSet("site index out of range", sites=sites, n_sites=n_sites)
    return sites


def partial_trace(a, spec: LatticeSpec, keep: Iterable[int]) -> np.ndarray:
    """Trace out every site not in ``keep``; kept sites stay in site order."""
    m = as_matrix(a)
    dims = spec.site_dims
    if m.shape != (spec.total_dim, spec.total_dim):
        raise DimMismatch("matrix does not match the lattice", shape=m.shape, dim=spec.total_dim)
    kept = sorted(_site_set(keep, spec.n_sites))
    n = spec.n_sites
    tensor = m.reshape(dims + dims)
    row_axes = list(range(n))
    col_axes = [i if i not in kept else n + i for i in range(n)]
    out_axes = kept + [n + i for i in kept]
    reduced = np.einsum(tensor, row_axes + col_axes, out_axes)
    d = math.prod(dims[i] for i in kept)
    return np.asarray(reduced).reshape(d, d)


def factor_permutation(dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Permutation matrix sending u_0⊗…⊗u_{L−1} to u_{order[0]}⊗…⊗u_{order[L−1]}."""
    dims = [int(d) for d in dims]
    if sorted(order) != list(range(len(dims))):
        raise BadSiteSet("order must be a permutation of the factors", order=list(order))
    total = math.prod(dims)
    idx = np.arange(total).reshape(dims).transpose(list(order)).ravel()
    return np.eye(total, dtype=complex)[idx]


def reorder_factors(mat, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Operator on ⊗dims conjugated so that new factor j is old factor order[j]."""
    m = as_matrix(mat)
    dims = [int(d) for d in dims]
    n = len(dims)
    total = math.prod(dims)
    if m.shape != (total, total):
        raise DimMismatch("operator does not match the factor dims", shape=m.shape, dims=dims)
    if sorted(order) != list(range(n)):
        raise BadSiteSet("order must be a permutation of the factors", order=list(order))
    axes = list(order) + [n + o for o in order]
    return m.reshape(dims + dims).transpose(axes).reshape(total, total)
