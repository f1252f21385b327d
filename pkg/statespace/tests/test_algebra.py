import numpy as np
import pytest

from statespace.core.errors import BadSiteSet, DimMismatch, NotIsometry, SiteCountMismatch, SizeCap
from statespace.models import DensityMatrix, Isometry, LatticeSpec
from statespace.services import algebra
from statespace.services.sampling import random_density, random_hermitian, random_isometry, random_unitary


def _isometry(rng, rows, cols, input_dims=None):
    return Isometry(matrix=random_unitary(rows, rng)[:, :cols], input_dims=input_dims or (cols,))


def test_embed_local_single_site(rng):
    spec = LatticeSpec.uniform(2, 3)
    a = random_hermitian(2, rng)
    assert np.allclose(algebra.embed_local(a, [1], spec), np.kron(np.kron(np.eye(2), a), np.eye(2)))


def test_embed_local_respects_site_order(rng):
    spec = LatticeSpec(site_dims=(2, 3))
    a, b = random_hermitian(2, rng), random_hermitian(3, rng)
    assert np.allclose(algebra.embed_local(np.kron(b, a), [1, 0], spec), np.kron(a, b))


def test_embed_local_errors():
    spec = LatticeSpec.uniform(2, 2)
    with pytest.raises(BadSiteSet):
        algebra.embed_local(np.eye(2), [], spec)
    with pytest.raises(DimMismatch):
        algebra.embed_local(np.eye(3), [0], spec)


def test_isometry_validation():
    with pytest.raises(NotIsometry):
        Isometry(matrix=np.ones((2, 1)))
    with pytest.raises(NotIsometry):
        Isometry(matrix=np.eye(2)[:, :1].T)


def test_blowup_and_size_cap(rng, settings_override):
    f = random_isometry(3, 2, rng)
    big = algebra.site_isometry_blowup(f, 2)
    assert big.matrix.shape == (9, 4)
    assert np.allclose(big.matrix, np.kron(f.matrix, f.matrix))
    settings_override(SIZE_CAP=8)
    with pytest.raises(SizeCap):
        algebra.site_isometry_blowup(f, 2)


def test_pushforward_lies_in_image(rng):
    f = random_isometry(4, 2, rng)
    rho = random_density(2, rng)
    pushed = algebra.state_pushforward(f, rho)
    p = algebra.isometry_image_projector(f)
    assert np.allclose(p @ pushed.matrix @ p, pushed.matrix)
    # pullback of an observable gives the same expectation
    b = random_hermitian(4, rng)
    assert np.trace(pushed.matrix @ b) == pytest.approx(np.trace(rho.matrix @ algebra.cp_pullback(f, b)))


def test_merged_spec_mismatch():
    with pytest.raises(SiteCountMismatch):
        algebra.merged_spec(LatticeSpec.uniform(2, 2), LatticeSpec.uniform(2, 3))


def test_eta_interleave_single_site_is_kron(rng):
    spec = LatticeSpec.uniform(2, 1)
    r1, r2 = random_density(2, rng), random_density(2, rng)
    out = algebra.eta_interleave(r1, r2, spec, spec)
    assert np.allclose(out.matrix, np.kron(r1.matrix, r2.matrix))


def test_naturality(rng):
    f1, f2 = random_isometry(3, 2, rng), random_isometry(2, 2, rng)
    r1, r2 = random_density(4, rng), random_density(4, rng)
    assert algebra.naturality_residual(f1, f2, r1, r2, 2) <= 1e-10


def test_permutation_action_cyclic():
    sigma = [1, 2, 0]
    p = algebra.permutation_action([2, 2, 2], sigma)
    e = np.eye(2)
    u = [e[0], e[1], (e[0] + e[1]) / np.sqrt(2)]
    source = np.kron(np.kron(u[0], u[1]), u[2])
    inv = [2, 0, 1]
    target = np.kron(np.kron(u[inv[0]], u[inv[1]]), u[inv[2]])
    assert np.linalg.norm(p @ source - target) <= 1e-12


def test_operad_identities(rng):
    es = [_isometry(rng, 2, 1) for _ in range(3)]
    d1 = _isometry(rng, 4, 4, (2, 2))
    d2 = _isometry(rng, 3, 2)
    c = _isometry(rng, 12, 12, (4, 3))
    assert algebra.operad_associativity_residual(c, [d1, d2], es) <= 1e-10

    fs = [_isometry(rng, 2, 2), _isometry(rng, 3, 2), _isometry(rng, 2, 1)]
    g = _isometry(rng, 14, 12)
    assert algebra.operad_equivariance_residual(g, fs, [2, 0, 1]) <= 1e-10

    outer = _isometry(rng, 12, 12)
    rhos = [random_density(2, rng) for _ in range(3)]
    assert algebra.theta_compatibility_residual(outer, [d1, d2], rhos) <= 1e-10
    assert algebra.operad_block_equivariance_residual(outer, [d1, d2], [[1, 0], [0]]) <= 1e-10


def test_operad_compose_shape_mismatch(rng):
    with pytest.raises(DimMismatch):
        algebra.operad_compose(_isometry(rng, 5, 5), [_isometry(rng, 2, 2), _isometry(rng, 2, 1)])


def test_theta_action_identity(rng):
    rho = random_density(3, rng)
    out = algebra.theta_action(Isometry.identity(3), [rho])
    assert isinstance(out, DensityMatrix)
    assert np.allclose(out.matrix, rho.matrix)
