import itertools

import numpy as np
import pytest
import scipy.linalg

from conftest import circulant_tproduct, make_transforms, randn
from phitensor import tensor as T
from phitensor.tproduct import (
    column_basis,
    conj_transpose,
    identity_tensor,
    incoherence,
    phi_product,
    project_t,
    project_t_perp,
    spectral_norm,
    to_slices,
    ttnn,
    ttsvd,
    tube_basis,
)
from phitensor.transforms import apply, db4_transform, fourier_transform


def unitarity_defect(q, t):
    """``|Q^H <> Q - I|_max`` for an ``n x rho x n3`` factor."""
    prod = phi_product(conj_transpose(q, t), q, t)
    return np.abs(prod - identity_tensor(q.shape[1], t)).max()


def test_identity_is_neutral(rng):
    a = randn(rng, 3, 4, 6)
    for t in make_transforms(6, rng):
        assert np.abs(phi_product(a, identity_tensor(4, t), t) - a).max() <= 1e-10
        assert np.abs(phi_product(identity_tensor(3, t), a, t) - a).max() <= 1e-10


def test_fourier_product_is_scaled_block_circulant(rng):
    # with the unitary DFT, A * B (circulant) = sqrt(n3) * (A <> B)
    a, b = randn(rng, 4, 3, 5), randn(rng, 3, 2, 5)
    t = fourier_transform(5)
    raw = phi_product(a.astype(complex), b.astype(complex), t)
    assert np.abs(raw.imag).max() <= 1e-10
    assert np.abs(np.sqrt(5) * raw.real - circulant_tproduct(a, b)).max() <= 1e-9
    real = phi_product(a, b, t)
    assert not np.iscomplexobj(real)


def test_tube_product_is_slicewise(rng):
    a, b = randn(rng, 1, 1, 7), randn(rng, 1, 1, 7)
    for t in make_transforms(7, rng):
        p = t.matrix
        expected = p.conj().T @ ((p @ a[0, 0]) * (p @ b[0, 0]))
        np.testing.assert_allclose(phi_product(a, b, t)[0, 0], expected, atol=1e-12)


def test_phi_product_bilinear(rng):
    a1, a2, b = randn(rng, 2, 3, 4), randn(rng, 2, 3, 4), randn(rng, 3, 2, 4)
    t = db4_transform(4)
    lhs = phi_product(2.0 * a1 - 3.0 * a2, b, t)
    rhs = 2.0 * phi_product(a1, b, t) - 3.0 * phi_product(a2, b, t)
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_phi_product_dim_mismatch(rng):
    t = fourier_transform(4)
    with pytest.raises(ValueError):
        phi_product(randn(rng, 2, 3, 4), randn(rng, 2, 3, 4), t)


def test_associativity(rng):
    a, b, c = randn(rng, 3, 4, 6), randn(rng, 4, 2, 6), randn(rng, 2, 5, 6)
    for t in make_transforms(6, rng):
        left = phi_product(phi_product(a, b, t), c, t)
        right = phi_product(a, phi_product(b, c, t), t)
        assert np.abs(left - right).max() <= 1e-9


def test_conj_transpose_involution(rng):
    a = randn(rng, 3, 4, 5, complex_=True)
    for t in make_transforms(5, rng):
        back = conj_transpose(conj_transpose(a, t), t)
        assert back.shape == a.shape
        assert np.abs(back - a).max() <= 1e-12


def test_conj_transpose_of_real_is_real_under_fourier(rng):
    a = randn(rng, 3, 4, 5)
    t = fourier_transform(5)
    out = conj_transpose(a, t)
    assert not np.iscomplexobj(out)
    # classical t-transpose: transpose each slice, reverse slices 2..n3
    expected = np.concatenate([a[:, :, :1], a[:, :, :0:-1]], axis=2).transpose(1, 0, 2)
    assert np.abs(out - expected).max() <= 1e-10


def test_adjoint_identity(rng):
    for _ in range(5):
        a, b, c = randn(rng, 3, 4, 6, complex_=True), randn(rng, 4, 2, 6, complex_=True), randn(rng, 3, 2, 6, complex_=True)
        for t in make_transforms(6, rng):
            lhs = T.inner(phi_product(a, b, t), c)
            rhs = T.inner(b, phi_product(conj_transpose(a, t), c, t))
            assert abs(lhs - rhs) <= 1e-9


def test_identity_tensor(rng):
    for t in make_transforms(4, rng):
        eye = identity_tensor(3, t)
        assert np.abs(phi_product(eye, eye, t) - eye).max() <= 1e-12
        svd = ttsvd(eye, t)
        assert svd.tubal_rank == 3
        assert list(svd.multi_rank) == [3] * 4
    np.testing.assert_array_equal(identity_tensor(3, fourier_transform(1))[:, :, 0], np.eye(3))


def planted(rng, n1, n2, n3, r, t):
    return phi_product(randn(rng, n1, r, n3), randn(rng, r, n2, n3), t)


def test_ttsvd_recovers_constructed_rank(rng):
    for t in make_transforms(6, rng):
        a = planted(rng, 5, 4, 6, 2, t)
        svd = ttsvd(a, t)
        assert svd.tubal_rank == 2
        assert list(svd.multi_rank) == [2] * 6


def test_ttsvd_of_zero():
    t = fourier_transform(3)
    for mode in ("full", "skinny"):
        svd = ttsvd(np.zeros((2, 3, 3)), t, mode)
        assert svd.tubal_rank == 0
        assert not svd.multi_rank.any()
    assert ttsvd(np.zeros((2, 3, 3)), t, "skinny").u.shape == (2, 0, 3)


def test_ttnn_equals_sum_of_singular_tubes(rng):
    a = randn(rng, 4, 5, 6)
    for t in make_transforms(6, rng):
        svd = ttsvd(a, t)
        s_hat = apply(t, svd.s)
        diag = sum(np.trace(s_hat[:, :, k]).real for k in range(6))
        oracle = sum(np.linalg.svd(apply(t, a)[:, :, k], compute_uv=False).sum() for k in range(6))
        assert abs(ttnn(a, t) - oracle) <= 1e-9
        assert abs(diag - oracle) <= 1e-9


@pytest.mark.parametrize("dims", [(1, 1, 1), (3, 5, 2), (6, 4, 8), (16, 16, 16), (9, 12, 10)])
@pytest.mark.parametrize("mode", ["full", "skinny"])
def test_ttsvd_invariants(dims, mode, rng):
    a = randn(rng, *dims)
    for t in make_transforms(dims[2], rng):
        svd = ttsvd(a, t, mode)
        rho = svd.width
        assert rho == (min(dims[:2]) if mode == "full" else svd.tubal_rank)
        recon = phi_product(phi_product(svd.u, svd.s, t), conj_transpose(svd.v, t), t)
        assert T.norm_fro(recon - a) <= 1e-8 * max(1.0, T.norm_fro(a))
        assert unitarity_defect(svd.u, t) <= 1e-8
        assert unitarity_defect(svd.v, t) <= 1e-8
        s_hat = apply(t, svd.s)
        for k in range(dims[2]):
            sl = s_hat[:, :, k]
            assert np.abs(sl - np.diag(np.diag(sl))).max() <= 1e-10
            d = np.diag(sl).real
            assert np.all(d >= -1e-10) and np.all(np.diff(d) <= 1e-10)
        assert svd.tubal_rank == svd.multi_rank.max()


def test_ttsvd_is_deterministic_and_phase_normalized(rng):
    a = randn(rng, 4, 3, 5)
    t = fourier_transform(5)
    s1, s2 = ttsvd(a, t), ttsvd(a.copy(), t)
    np.testing.assert_array_equal(s1.u, s2.u)
    u_hat = to_slices(s1.u, t)
    for k in range(5):
        for c in range(3):
            col = u_hat[k, :, c]
            first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
            assert abs(first.imag) <= 1e-12 and first.real > 0


def test_ttsvd_rejects_unknown_mode(rng):
    with pytest.raises(ValueError):
        ttsvd(randn(rng, 2, 2, 2), fourier_transform(2), "thin")


def test_ttnn_basics(rng):
    assert ttnn(np.zeros((3, 3, 4)), fourier_transform(4)) == 0
    for t in make_transforms(4, rng):
        assert ttnn(identity_tensor(3, t), t) == pytest.approx(3 * 4, abs=1e-10)
    a = randn(rng, 4, 4, 4)
    for t in make_transforms(4, rng):
        assert ttnn(a, t) >= T.norm_fro(a) >= spectral_norm(a, t)


def test_spectral_norm(rng):
    for t in make_transforms(6, rng):
        assert spectral_norm(identity_tensor(3, t), t) == pytest.approx(1.0, abs=1e-12)
    a = randn(rng, 3, 4, 6)
    t = fourier_transform(6)
    assert spectral_norm(-2.5 * a, t) == pytest.approx(2.5 * spectral_norm(a, t), rel=1e-12)
    for t in make_transforms(6, rng):
        hat = apply(t, a)
        dense = scipy.linalg.block_diag(*[hat[:, :, k] for k in range(6)])
        assert spectral_norm(a, t) == pytest.approx(np.linalg.norm(dense, 2), rel=1e-12)


def test_unit_tensor_from_bases_exhaustive(rng):
    n1, n2, n3 = 3, 2, 4
    for t in make_transforms(n3, rng):
        for i, j, k in itertools.product(range(n1), range(n2), range(n3)):
            composite = phi_product(
                phi_product(column_basis(i, n1, n3, t), tube_basis(k, n3, t), t),
                conj_transpose(column_basis(j, n2, n3, t), t),
                t,
            )
            unit = np.zeros((n1, n2, n3))
            unit[i, j, k] = 1
            assert np.abs(apply(t, composite) - unit).max() <= 1e-10


def test_basis_expansion_reconstructs(rng):
    a = randn(rng, 3, 2, 4)
    acc = np.zeros_like(a)
    for i, j, k in itertools.product(range(3), range(2), range(4)):
        unit = np.zeros_like(a)
        unit[i, j, k] = 1
        acc += T.inner(unit, a).real * unit
    assert np.abs(acc - a).max() <= 1e-10


def test_column_basis_norm(rng):
    for t in make_transforms(4, rng):
        e = column_basis(1, 3, 4, t)
        assert T.norm_fro(apply(t, e)) == pytest.approx(2.0, abs=1e-12)
        assert T.norm_fro(e) == pytest.approx(2.0, abs=1e-12)
    t = fourier_transform(4)
    with pytest.raises(IndexError):
        column_basis(3, 3, 4, t)
    with pytest.raises(IndexError):
        tube_basis(4, 4, t)


@pytest.fixture(params=["fourier", "db4", "data"])
def tangent_setup(request, rng):
    n1, n2, n3, r = 5, 4, 6, 2
    t = {t.kind: t for t in make_transforms(n3, rng)}[request.param]
    svd = ttsvd(planted(rng, n1, n2, n3, r, t), t, "skinny")
    return t, svd, (n1, n2, n3)


def test_project_t_idempotent_and_complementary(tangent_setup, rng):
    t, svd, dims = tangent_setup
    z = randn(rng, *dims)
    pz = project_t(z, svd)
    assert np.abs(project_t(pz, svd) - pz).max() <= 1e-9
    assert np.abs(pz + project_t_perp(z, svd) - z).max() <= 1e-9


def test_project_t_orthogonal_and_self_adjoint(tangent_setup, rng):
    t, svd, dims = tangent_setup
    for _ in range(5):
        a, b = randn(rng, *dims), randn(rng, *dims)
        assert abs(T.inner(project_t(a, svd), project_t_perp(b, svd))) <= 1e-9
        assert abs(T.inner(project_t(a, svd), b) - T.inner(a, project_t(b, svd))) <= 1e-9


def test_project_t_fixes_tangent_members(tangent_setup, rng):
    t, svd, dims = tangent_setup
    n1, n2, n3 = dims
    y, w = randn(rng, n2, svd.width, n3), randn(rng, n1, svd.width, n3)
    z = phi_product(svd.u, conj_transpose(y, t), t) + phi_product(w, conj_transpose(svd.v, t), t)
    assert np.abs(project_t(z, svd) - z).max() <= 1e-9
    assert np.abs(project_t_perp(z, svd)).max() <= 1e-9


def test_project_t_dim_mismatch(tangent_setup, rng):
    _, svd, (n1, n2, n3) = tangent_setup
    with pytest.raises(ValueError):
        project_t(randn(rng, n1 + 1, n2, n3), svd)


def test_incoherence_reduces_to_matrix_formula(rng):
    n1, n2 = 7, 5
    x, y = randn(rng, n1), randn(rng, n2)
    t = fourier_transform(1)
    mu = incoherence(ttsvd(np.outer(x, y)[:, :, None], t, "skinny"))
    u, v = x / np.linalg.norm(x), y / np.linalg.norm(y)
    assert mu.mu_u == pytest.approx(n1 * np.max(u**2), abs=1e-9)
    assert mu.mu_v == pytest.approx(n2 * np.max(v**2), abs=1e-9)
    assert mu.mu_joint == pytest.approx(n1 * n2 * np.max(np.abs(np.outer(u, v))) ** 2, abs=1e-9)


def test_incoherence_matches_definition(rng):
    n1, n2, n3, r = 5, 4, 6, 2
    for t in make_transforms(n3, rng):
        svd = ttsvd(planted(rng, n1, n2, n3, r, t), t, "skinny")
        uh, vh = conj_transpose(svd.u, t), conj_transpose(svd.v, t)
        max_u = max(T.norm_fro(phi_product(uh, column_basis(i, n1, n3, t), t)) ** 2 for i in range(n1))
        max_v = max(T.norm_fro(phi_product(vh, column_basis(j, n2, n3, t), t)) ** 2 for j in range(n2))
        joint = T.norm_inf(phi_product(svd.u, vh, t))
        mu = incoherence(svd)
        assert mu.mu_u == pytest.approx(n1 / r * max_u, rel=1e-9)
        assert mu.mu_v == pytest.approx(n2 / r * max_v, rel=1e-9)
        assert mu.mu_joint == pytest.approx(n1 * n2 * n3 / r * joint**2, rel=1e-9)
        assert mu.mu == max(mu)


@pytest.mark.parametrize("n3", [1, 4])
def test_incoherence_of_identity(n3, rng):
    # ||U^H <> e_i||_F^2 = n3 for the identity, so mu_u = n3
    for t in make_transforms(n3, rng):
        mu = incoherence(ttsvd(identity_tensor(3, t), t, "skinny"))
        assert mu.mu_u == pytest.approx(n3, abs=1e-9)
        assert mu.mu_v == pytest.approx(n3, abs=1e-9)


def test_incoherence_ignores_singular_value_scale(rng):
    t = fourier_transform(5)
    a = planted(rng, 6, 5, 5, 2, t)
    mu1, mu2 = incoherence(ttsvd(a, t, "skinny")), incoherence(ttsvd(37.5 * a, t, "skinny"))
    np.testing.assert_allclose(tuple(mu1), tuple(mu2), rtol=1e-9)


def test_incoherence_rejects_zero():
    t = fourier_transform(2)
    with pytest.raises(ValueError):
        incoherence(ttsvd(np.zeros((2, 2, 2)), t, "skinny"))
