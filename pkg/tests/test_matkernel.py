import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from geocrb import matkernel
from geocrb.errors import DimensionMismatch, NonConvergence


def random_herm(seed, n, scale=1.0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 8)


@settings(max_examples=60, deadline=None)
@given(seeds, dims)
def test_herm_eig_reconstructs_and_matches_lapack(seed, n):
    m = random_herm(seed, n)
    w, v = matkernel.herm_eig(m)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-12)
    np.testing.assert_allclose((v * w) @ v.conj().T, m, atol=1e-11)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(m), atol=1e-11)


def test_herm_eig_diagonal_and_degenerate():
    w, v = matkernel.herm_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(w, [1, 2, 3])
    w, _ = matkernel.herm_eig(np.eye(4))
    np.testing.assert_allclose(w, np.ones(4))
    w, _ = matkernel.herm_eig(np.zeros((3, 3)))
    np.testing.assert_allclose(w, 0)


def test_herm_eig_pauli_y():
    w, v = matkernel.herm_eig(np.array([[0, -1j], [1j, 0]]))
    np.testing.assert_allclose(w, [-1, 1], atol=1e-15)


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        matkernel.herm_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DimensionMismatch):
        matkernel.herm_eig(np.ones((2, 3)))


def test_herm_eig_sweep_budget():
    with pytest.raises(NonConvergence):
        matkernel.herm_eig(random_herm(1, 6), max_sweeps=1)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(0, 5))
def test_pinv_sym_penrose_conditions(seed, n, rank):
    rank = min(rank, n)
    rng = np.random.default_rng(seed)
    b = rng.normal(size=(n, rank))
    m = b @ b.T
    p = matkernel.pinv_sym(m)
    np.testing.assert_allclose(m @ p @ m, m, atol=1e-8 * max(1, np.abs(m).max()))
    np.testing.assert_allclose(p @ m @ p, p, atol=1e-7 * max(1, np.abs(p).max()))
    np.testing.assert_allclose(p, np.linalg.pinv(m, rcond=1e-10, hermitian=True), atol=1e-7 * max(1, np.abs(p).max()))


def test_psd_power_inverse_square_root():
    rng = np.random.default_rng(3)
    b = rng.normal(size=(4, 4))
    m = b @ b.T + np.eye(4)
    k = matkernel.psd_power(m, -0.5)
    np.testing.assert_allclose(k @ m @ k, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(matkernel.psd_power(m, 0.5), scipy.linalg.sqrtm(m).real, atol=1e-12)


def test_null_projector_rank_deficient():
    m = np.diag([2.0, 0.0, 1.0])
    np.testing.assert_allclose(matkernel.null_projector(m), np.diag([0.0, 1.0, 0.0]))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 5))
def test_trace_norm_matches_svd(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    assert matkernel.trace_norm(m) == pytest.approx(np.linalg.svd(m, compute_uv=False).sum(), rel=1e-11)


def test_trace_norm_antisymmetric():
    # real antisymmetric [[0, a], [-a, 0]] has singular values |a|, |a|
    assert matkernel.trace_norm(np.array([[0, 0.3], [-0.3, 0]])) == pytest.approx(0.6)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 6), st.floats(-3, 3))
def test_expm_hermitian_matches_scipy(seed, n, t):
    h = random_herm(seed, n)
    np.testing.assert_allclose(matkernel.expm_hermitian(h, t), scipy.linalg.expm(-1j * t * h), atol=1e-10)


def test_as_hermitian_relative_tolerance():
    # residual 1e-6 is below 1e-12 * max|m| = 2e-6
    m = np.array([[1e6, 2e6], [2e6 + 1e-6, 1e6]])
    out = matkernel.as_hermitian(m)
    assert matkernel.hermitian_residual(out) == 0.0
    with pytest.raises(ValueError):
        matkernel.as_hermitian(np.array([[1.0, np.nan], [np.nan, 1.0]]))
