"""Seeded random instances: states, operators, isometries and based loops."""

import numpy as np

from statespace.core.errors import DimMismatch
from statespace.models import DensityMatrix, Isometry, SampledPath


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> Isometry:
    if cols > rows:
        raise DimMismatch("an isometry needs rows >= cols", rows=rows, cols=cols)
    return Isometry(matrix=random_unitary(rows, rng)[:, :cols])


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (z + z.conj().T) / 2


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random state of the given rank (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return DensityMatrix(matrix=rho / np.real(np.trace(rho)))


def random_pure(dim: int, rng: np.random.Generator) -> DensityMatrix:
    return random_density(dim, rng, rank=1)


def _sample_loop(params: np.ndarray, states: list[np.ndarray]) -> SampledPath:
    states[-1] = states[0]
    return SampledPath(params=params, states=np.array(states), loop=True)


def random_loop(
    dim: int,
    samples: int,
    rng: np.random.Generator,
    modes: int = 3,
    amplitude: float = 1.5,
    mixing: float = 0.5,
) -> SampledPath:
    """Loop based at |e0⟩⟨e0| mixing a Fourier pure loop with a random state.

    ψ(t) ∝ e0 + Σ_k a_k sin(πkt) and ρ(t) = (1 − p(t))|ψ⟩⟨ψ| + p(t)σ with
    p(t) = mixing·sin²(πt).
    """
    params = np.linspace(0.0, 1.0, samples)
    coeffs = amplitude * (rng.standard_normal((modes, dim)) + 1j * rng.standard_normal((modes, dim))) / np.sqrt(2 * dim)
    sigma = random_density(dim, rng).matrix
    e0 = np.zeros(dim, dtype=complex)
    e0[0] = 1.0
    states = []
    for t in params:
        psi = e0 + np.sin(np.pi * np.arange(1, modes + 1) * t) @ coeffs
        psi /= np.linalg.norm(psi)
        p = mixing * np.sin(np.pi * t) ** 2
        states.append((1.0 - p) * np.outer(psi, psi.conj()) + p * sigma)
    return _sample_loop(params, states)


def great_circle_loop(samples: int, dim: int = 2) -> SampledPath:
    """Pure loop e0 → e1 → e0 along a great circle of the Bloch sphere."""
    params = np.linspace(0.0, 1.0, samples)
    states = []
    for t in params:
        psi = np.zeros(dim, dtype=complex)
        psi[0], psi[1] = np.cos(np.pi * t), np.sin(np.pi * t)
        states.append(np.outer(psi, psi.conj()))
    return _sample_loop(params, states)


def constant_loop(dim: int, samples: int = 2) -> SampledPath:
    base = DensityMatrix.basis_state(dim).matrix
    return SampledPath(params=np.linspace(0.0, 1.0, samples), states=np.repeat(base[None], samples, axis=0), loop=True)


def random_disk_path(samples: int, rng: np.random.Generator, modes: int = 3) -> np.ndarray:
    """Closed path in the closed unit disk, radially clipped to the boundary."""
    t = np.linspace(0.0, 1.0, samples)
    k = np.arange(1, modes + 1)
    coeffs = rng.standard_normal((modes, 2)) @ np.array([1.0, 1j])
    z = 0.2 + np.sin(np.pi * np.outer(t, k)) @ (1.2 * coeffs)
    r = np.abs(z)
    return np.where(r > 1.0, z / np.where(r > 0, r, 1.0), z)


def fibonacci_sphere(count: int) -> list[tuple[float, float, float]]:
    """Deterministic, nearly uniform unit vectors."""
    golden = np.pi * (3.0 - np.sqrt(5.0))
    out = []
    for i in range(count):
        z = 1.0 - 2.0 * (i + 0.5) / count
        r = np.sqrt(1.0 - z * z)
        w = np.array([r * np.cos(golden * i), r * np.sin(golden * i), z])
        out.append(tuple((w / np.linalg.norm(w)).tolist()))
    return out

