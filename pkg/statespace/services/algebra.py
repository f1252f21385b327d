"""Finite truncations of the quasi-local algebra and the operad formulas.

Operators on a lattice use the Kronecker layout with site 0 as the leftmost
(slowest) factor. Permutations are given as image lists: ``sigma[i]`` is
σ(i), and σ acts on tensors by u_0⊗…⊗u_{k−1} ↦ u_{σ⁻¹(0)}⊗…⊗u_{σ⁻¹(k−1)}.
"""

import logging
import math
from typing import Sequence

import numpy as np

from statespace.core.config import settings
from statespace.core.errors import BadSiteSet, DimMismatch, SiteCountMismatch, SizeCap
from statespace.models import DensityMatrix, Isometry, LatticeSpec
from statespace.services.linalg import _site_set, as_matrix, factor_permutation, reorder_factors

logger = logging.getLogger(__name__)


def embed_local(op, sub: Sequence[int], spec: LatticeSpec) -> np.ndarray:
    """ι_Λ: tensor ``op`` (factors ordered as ``sub``) with identities elsewhere."""
    m = as_matrix(op)
    sites = _site_set(sub, spec.n_sites)
    if not sites:
        raise BadSiteSet("embedding needs at least one site")
    dims = spec.site_dims
    d_sub = math.prod(dims[s] for s in sites)
    if m.shape != (d_sub, d_sub):
        raise DimMismatch("operator does not match the chosen sites", shape=m.shape, dim=d_sub)
    rest = [s for s in range(spec.n_sites) if s not in sites]
    layout = sites + rest
    full = np.kron(m, np.eye(math.prod(dims[s] for s in rest), dtype=complex))
    position = {site: i for i, site in enumerate(layout)}
    return reorder_factors(full, [dims[s] for s in layout], [position[v] for v in range(spec.n_sites)])


def site_isometry_blowup(f: Isometry, n_sites: int) -> Isometry:
    """f_Λ = f^{⊗n} on n sites."""
    if n_sites < 1:
        raise BadSiteSet("blowup needs at least one site", n_sites=n_sites)
    if f.rows**n_sites > settings.SIZE_CAP:
        raise SizeCap(
            "blown-up isometry exceeds the size cap",
            rows=f.rows**n_sites,
            cap=settings.SIZE_CAP,
        )
    out = f.matrix
    for _ in range(n_sites - 1):
        out = np.kron(out, f.matrix)
    return Isometry(matrix=out, input_dims=(f.cols,) * n_sites)


def cp_pullback(f_big: Isometry, b) -> np.ndarray:
    """Ad(f*): b ↦ f*·b·f."""
    m = as_matrix(b)
    if m.shape != (f_big.rows, f_big.rows):
        raise DimMismatch("operator does not match the isometry codomain", shape=m.shape, rows=f_big.rows)
    f = f_big.matrix
    return f.conj().T @ m @ f


def state_pushforward(f_big: Isometry, rho: DensityMatrix) -> DensityMatrix:
    """ψ ↦ ψ∘Ad(f*), realized as ρ ↦ fρf*."""
    if rho.dim != f_big.cols:
        raise DimMismatch("state does not match the isometry domain", dim=rho.dim, cols=f_big.cols)
    f = f_big.matrix
    return DensityMatrix(matrix=f @ rho.matrix @ f.conj().T)


def isometry_image_projector(f: Isometry) -> np.ndarray:
    return f.matrix @ f.matrix.conj().T


def merged_spec(spec1: LatticeSpec, spec2: LatticeSpec) -> LatticeSpec:
    if spec1.n_sites != spec2.n_sites:
        raise SiteCountMismatch(
            "lattices have different site counts",
            sites1=spec1.n_sites,
            sites2=spec2.n_sites,
        )
    return LatticeSpec(site_dims=tuple(a * b for a, b in zip(spec1.site_dims, spec2.site_dims)))


def interleave_operator(a1, a2, spec1: LatticeSpec, spec2: LatticeSpec) -> np.ndarray:
    """η on operators: a1⊗a2 reindexed so site v carries (system 1, system 2)."""
    merged = merged_spec(spec1, spec2)
    n = spec1.n_sites
    order = [x for v in range(n) for x in (v, n + v)]
    full = np.kron(as_matrix(a1), as_matrix(a2))
    if full.shape != (spec1.total_dim * spec2.total_dim,) * 2:
        raise DimMismatch("operators do not match their lattices")
    out = reorder_factors(full, list(spec1.site_dims) + list(spec2.site_dims), order)
    assert out.shape[0] == merged.total_dim
    return out


def eta_interleave(
    rho1: DensityMatrix, rho2: DensityMatrix, spec1: LatticeSpec, spec2: LatticeSpec
) -> DensityMatrix:
    """ω₁⊗ω₂ on the per-site merged lattice, system-1 index slowest."""
    if rho1.dim != spec1.total_dim or rho2.dim != spec2.total_dim:
        raise DimMismatch("states do not match their lattices")
    return DensityMatrix(matrix=interleave_operator(rho1.matrix, rho2.matrix, spec1, spec2))


def naturality_residual(
    f1: Isometry, f2: Isometry, rho1: DensityMatrix, rho2: DensityMatrix, n_sites: int
) -> float:
    """Deviation in the square push((f₁⊗f₂)_Λ)∘η = η∘(push(f₁_Λ) × push(f₂_Λ))."""
    if rho1.dim != f1.cols**n_sites or rho2.dim != f2.cols**n_sites:
        raise DimMismatch("states do not match the isometry domains on the lattice")
    source1 = LatticeSpec.uniform(f1.cols, n_sites)
    source2 = LatticeSpec.uniform(f2.cols, n_sites)
    target1 = LatticeSpec.uniform(f1.rows, n_sites)
    target2 = LatticeSpec.uniform(f2.rows, n_sites)
    joint = Isometry(matrix=np.kron(f1.matrix, f2.matrix))
    left = state_pushforward(site_isometry_blowup(joint, n_sites), eta_interleave(rho1, rho2, source1, source2))
    right = eta_interleave(
        state_pushforward(site_isometry_blowup(f1, n_sites), rho1),
        state_pushforward(site_isometry_blowup(f2, n_sites), rho2),
        target1,
        target2,
    )
    return float(np.linalg.norm(left.matrix - right.matrix))


def _inverse(perm: Sequence[int]) -> list[int]:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(perm))):
        raise BadSiteSet("not a permutation", permutation=perm)
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return inv


def permutation_action(target_dims: Sequence[int], sigma: Sequence[int]) -> np.ndarray:
    """Matrix of σ acting on tensors whose permuted factors have ``target_dims``."""
    inv = _inverse(sigma)
    source_dims = [target_dims[s] for s in sigma]
    return factor_permutation(source_dims, inv)


def operad_compose(g: Isometry, fs: Sequence[Isometry]) -> Isometry:
    """γ(g; f₁,…,f_k) = g∘(f₁⊗⋯⊗f_k)."""
    if not fs:
        raise DimMismatch("composition needs at least one input")
    inner = fs[0].matrix
    for f in fs[1:]:
        inner = np.kron(inner, f.matrix)
    if g.cols != inner.shape[0]:
        raise DimMismatch(
            "outer isometry does not accept the tensor of the inputs",
            cols=g.cols,
            rows=[f.rows for f in fs],
        )
    return Isometry(
        matrix=g.matrix @ inner,
        input_dims=tuple(d for f in fs for d in f.input_dims),
    )


def _right_act(f: Isometry, sigma: Sequence[int]) -> Isometry:
    """fσ = f∘σ; the domain factorization of fσ is the σ-preimage of f's."""
    action = permutation_action(f.input_dims, sigma)
    return Isometry(matrix=f.matrix @ action, input_dims=tuple(f.input_dims[s] for s in sigma))


def operad_equivariance_residual(g: Isometry, fs: Sequence[Isometry], sigma: Sequence[int]) -> float:
    """‖γ(gσ; f₁..f_k) − γ(g; f_{σ⁻¹(1)}..f_{σ⁻¹(k)})·σ(j₁..j_k)‖_F.

    ``gσ`` is taken as g∘P_σ where P_σ reorders the outputs of the f's, so g
    must accept the tensor of the f's in the order f_{σ⁻¹(1)},…,f_{σ⁻¹(k)}.
    """
    k = len(fs)
    inv = _inverse(sigma)
    if k != len(inv):
        raise DimMismatch("permutation size differs from the number of inputs", k=k, size=len(inv))
    p_sigma = factor_permutation([f.rows for f in fs], inv)
    if g.cols != p_sigma.shape[0]:
        raise DimMismatch("outer isometry does not accept the tensor of the inputs")
    g_sigma = Isometry(matrix=g.matrix @ p_sigma, input_dims=tuple(f.rows for f in fs))
    left = operad_compose(g_sigma, fs).matrix

    reordered = [fs[i] for i in inv]
    offsets = np.cumsum([0] + [f.arity for f in fs]).tolist()
    block_order = [offsets[i] + j for i in inv for j in range(fs[i].arity)]
    all_dims = [d for f in fs for d in f.input_dims]
    p_block = factor_permutation(all_dims, block_order)
    right = operad_compose(g, reordered).matrix @ p_block
    return float(np.linalg.norm(left - right))


def operad_block_equivariance_residual(
    g: Isometry, fs: Sequence[Isometry], taus: Sequence[Sequence[int]]
) -> float:
    """‖γ(g; f₁τ₁,…,f_kτ_k) − γ(g; f⃗)·(τ₁×⋯×τ_k)‖_F."""
    if len(taus) != len(fs):
        raise DimMismatch("one permutation per input is required")
    left = operad_compose(g, [_right_act(f, tau) for f, tau in zip(fs, taus)]).matrix
    offsets = np.cumsum([0] + [f.arity for f in fs]).tolist()
    product = [offsets[i] + t for i, tau in enumerate(taus) for t in tau]
    target = [d for f in fs for d in f.input_dims]
    right = operad_compose(g, fs).matrix @ permutation_action(target, product)
    return float(np.linalg.norm(left - right))


def operad_associativity_residual(c: Isometry, ds: Sequence[Isometry], es: Sequence[Isometry]) -> float:
    """‖γ(γ(c; d⃗); e⃗) − γ(c; γ(d₁; e-block₁),…,γ(d_k; e-block_k))‖_F."""
    arities = [d.arity for d in ds]
    if len(es) != sum(arities):
        raise DimMismatch("one inner input per input of the middle layer is required", expected=sum(arities), got=len(es))
    for d, e in zip([x for d in ds for x in d.input_dims], es):
        if d != e.rows:
            raise DimMismatch("inner input does not land in the middle factor", factor=d, rows=e.rows)
    left = operad_compose(operad_compose(c, ds), es).matrix
    blocks = []
    start = 0
    for d, j in zip(ds, arities):
        blocks.append(operad_compose(d, es[start : start + j]))
        start += j
    right = operad_compose(c, blocks).matrix
    return float(np.linalg.norm(left - right))


def theta_action(f: Isometry, rhos: Sequence[DensityMatrix]) -> DensityMatrix:
    """θ_j(f; ω₁,…,ω_j) = push(f, ω₁⊗⋯⊗ω_j) on single-site instances."""
    joint = rhos[0].matrix
    for rho in rhos[1:]:
        joint = np.kron(joint, rho.matrix)
    return state_pushforward(f, DensityMatrix(matrix=joint))


def theta_compatibility_residual(g: Isometry, fs: Sequence[Isometry], rhos: Sequence[DensityMatrix]) -> float:
    """‖θ(γ(g; f⃗); ω⃗) − θ(g; θ(f₁; ω-block₁),…)‖_F."""
    arities = [f.arity for f in fs]
    if len(rhos) != sum(arities):
        raise DimMismatch("one state per input is required", expected=sum(arities), got=len(rhos))
    left = theta_action(operad_compose(g, fs), rhos).matrix
    inner = []
    start = 0
    for f, j in zip(fs, arities):
        inner.append(theta_action(f, rhos[start : start + j]))
        start += j
    right = theta_action(g, inner).matrix
    return float(np.linalg.norm(left - right))
