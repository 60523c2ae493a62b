import numpy as np
import pytest

from imputed_ridge import (
    Dataset,
    KernelMatrix,
    LiftedTensor,
    Provenance,
    build_km,
    build_kmn,
    dump_kernel,
    kernel_gradient_contraction,
    lift,
    load_kernel,
    min_eig_low_rank,
    min_eigpair,
)
from imputed_ridge.kernel import quad_factors
from tests.conftest import random_corrupted


def random_lifted(rng, d, scale=0.5):
    slices = rng.standard_normal((d, d, d)) * scale
    slices = 0.5 * (slices + slices.transpose(0, 2, 1))
    norm = float(np.sqrt((slices**2).sum()))
    return LiftedTensor(slices, norm + 1e-9)


def test_lift_outer_products():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    N = lift(M)
    np.testing.assert_allclose(N.slices[0], np.outer([1.0, 3.0], [1.0, 3.0]))
    np.testing.assert_allclose(N.slices[1], np.outer([2.0, 4.0], [2.0, 4.0]))
    assert N.gamma2 == pytest.approx(np.linalg.norm(M) ** 2)


def test_lift_consistency(rng):
    """The lifted kernel at N = lift(M) equals the exact kernel."""
    for _ in range(20):
        m = int(rng.integers(3, 15))
        d = int(rng.integers(2, 6))
        ds = random_corrupted(rng, m, d)
        M = rng.standard_normal((d, d))
        exact = build_km(ds, M)
        relaxed = build_kmn(ds, M, lift(M))
        assert exact.provenance is Provenance.EXACT
        assert relaxed.provenance is Provenance.RELAXED
        np.testing.assert_allclose(relaxed.K, exact.K, atol=1e-9)


def test_kernel_affine_in_m_and_n(rng):
    """K(M, N) - K(M, 0) - K(0, N) + K(0, 0) vanishes."""
    ds = random_corrupted(rng, 10, 3)
    d = 3
    M = rng.standard_normal((d, d))
    N = random_lifted(rng, d)
    Z0 = LiftedTensor.zeros(d)
    M0 = np.zeros((d, d))
    lhs = (
        build_kmn(ds, M, N).K
        - build_kmn(ds, M, Z0).K
        - build_kmn(ds, M0, N).K
        + build_kmn(ds, M0, Z0).K
    )
    np.testing.assert_allclose(lhs, 0.0, atol=1e-10)


def test_kernel_zero_point_is_gram(rng):
    ds = random_corrupted(rng, 8, 3)
    K = build_kmn(ds, np.zeros((3, 3)), LiftedTensor.zeros(3)).K
    np.testing.assert_allclose(K, ds.X @ ds.X.T, atol=1e-12)


def test_quad_factors_reproduce_quadratic(rng):
    for _ in range(10):
        m = int(rng.integers(4, 12))
        d = int(rng.integers(2, 5))
        ds = random_corrupted(rng, m, d)
        a = rng.standard_normal(m)
        M = rng.standard_normal((d, d))
        N = random_lifted(rng, d)
        const, s, V = quad_factors(ds.X, 1.0 - ds.Z, a)
        val = const
        for k in range(d):
            val += 2.0 * s[k] * (M[:, k] @ V[:, k])
            val += V[:, k] @ N.slices[k] @ V[:, k]
        direct = a @ build_kmn(ds, M, N).K @ a
        assert val == pytest.approx(direct, abs=1e-9 * max(1.0, abs(direct)))


def test_gradient_matches_finite_differences(rng):
    """Central differences on alpha' K alpha, entry by entry."""
    h = 1e-6
    for _ in range(10):
        m = int(rng.integers(4, 10))
        d = int(rng.integers(2, 4))
        ds = random_corrupted(rng, m, d)
        alpha = rng.standard_normal(m)
        G_M, G_N = kernel_gradient_contraction(ds, alpha)

        def f(M, slices):
            N = LiftedTensor(slices, float(np.sqrt((slices**2).sum())) + 1e-9)
            return float(alpha @ build_kmn(ds, M, N).K @ alpha)

        M0 = rng.standard_normal((d, d))
        S0 = rng.standard_normal((d, d, d))
        fd_M = np.zeros((d, d))
        for i in range(d):
            for j in range(d):
                Mp, Mm = M0.copy(), M0.copy()
                Mp[i, j] += h
                Mm[i, j] -= h
                fd_M[i, j] = (f(Mp, S0) - f(Mm, S0)) / (2 * h)
        rel = np.linalg.norm(fd_M - G_M) / max(np.linalg.norm(fd_M), 1e-12)
        assert rel < 1e-4

        fd_N = np.zeros((d, d, d))
        for k in range(d):
            for i in range(d):
                for j in range(d):
                    Sp, Sm = S0.copy(), S0.copy()
                    Sp[k, i, j] += h
                    Sm[k, i, j] -= h
                    fd_N[k, i, j] = (f(M0, Sp) - f(M0, Sm)) / (2 * h)
        rel = np.linalg.norm((fd_N - G_N.slices).ravel()) / max(
            np.linalg.norm(fd_N.ravel()), 1e-12
        )
        assert rel < 1e-4


def test_gradient_alpha_shape_check(rng):
    ds = random_corrupted(rng, 6, 3)
    with pytest.raises(ValueError):
        kernel_gradient_contraction(ds, np.zeros(5))


def test_min_eigpair_dense(rng):
    A = rng.standard_normal((40, 40))
    A = 0.5 * (A + A.T)
    lam, v = min_eigpair(A)
    w = np.linalg.eigvalsh(A)
    assert lam == pytest.approx(w[0], abs=1e-10)
    np.testing.assert_allclose(A @ v, lam * v, atol=1e-8)
    assert np.linalg.norm(v) == pytest.approx(1.0)


def test_min_eigpair_iterative(rng):
    # above the dense cutoff the shifted Lanczos path runs
    n = 300
    A = rng.standard_normal((n, n))
    A = 0.5 * (A + A.T)
    lam, v = min_eigpair(A)
    w = np.linalg.eigvalsh(A)
    assert lam == pytest.approx(w[0], rel=1e-8, abs=1e-8)
    np.testing.assert_allclose(A @ v, lam * v, atol=1e-6)


def test_min_eigpair_psd_input(rng):
    B = rng.standard_normal((20, 8))
    lam, _ = min_eigpair(B @ B.T)
    assert lam >= -1e-10


def test_min_eigpair_rejects_asymmetric(rng):
    with pytest.raises(ValueError):
        min_eigpair(rng.standard_normal((5, 5)))


def test_min_eig_low_rank_agrees(rng):
    m, c = 50, 6
    B = rng.standard_normal((m, c))
    C = rng.standard_normal((c, c))
    C = 0.5 * (C + C.T)
    K = B @ C @ B.T  # range inside span(B), possibly indefinite
    lam, v = min_eig_low_rank(K, B)
    w = np.linalg.eigvalsh(K)
    assert lam == pytest.approx(min(w[0], 0.0), abs=1e-8)
    if v is not None:
        np.testing.assert_allclose(K @ v, lam * v, atol=1e-7)


def test_min_eig_low_rank_psd_reports_zero(rng):
    # rank-deficient PSD matrix: the nullspace supplies an exact zero
    B = rng.standard_normal((30, 4))
    K = B @ B.T
    lam, v = min_eig_low_rank(K, B)
    assert lam == 0.0
    assert v is None


def test_lifted_tensor_budget():
    with pytest.raises(ValueError):
        LiftedTensor(np.ones((2, 2, 2)), gamma2=1.0)
    t = LiftedTensor.projected(np.ones((2, 2, 2)), gamma2=1.0)
    assert t.norm == pytest.approx(1.0)


def test_kernel_matrix_symmetry_check(rng):
    A = rng.standard_normal((4, 4))
    with pytest.raises(ValueError):
        KernelMatrix(A, Provenance.EXACT)


def test_dump_load_round_trip(rng, tmp_path):
    ds = random_corrupted(rng, 7, 3)
    K = build_km(ds, rng.standard_normal((3, 3)))
    path = tmp_path / "k.bin"
    dump_kernel(K, path)
    back = load_kernel(path)
    np.testing.assert_array_equal(back, K.K)


def test_load_kernel_truncated(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"\x01\x02")
    with pytest.raises(ValueError, match="truncated"):
        load_kernel(p)
    import struct as st

    p.write_bytes(st.pack("<II", 3, 3) + b"\x00" * 16)
    with pytest.raises(ValueError, match="expected"):
        load_kernel(p)
