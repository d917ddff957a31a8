import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from inexact_gmres import linalg
from oracles import givens_lsq_reference, inverse_iteration_sigma_min, triple_loop_matvec


def test_matvec_matches_triple_loop():
    rng = np.random.default_rng(1)
    A = sp.random_array((30, 30), density=0.2, random_state=rng, format="csr")
    v = rng.standard_normal(30)
    assert np.allclose(linalg.matvec(A, v), triple_loop_matvec(A, v), rtol=1e-14, atol=1e-14)
    D = A.toarray()
    assert np.allclose(linalg.matvec(D, v), triple_loop_matvec(D, v), rtol=1e-14, atol=1e-14)


def test_matvec_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        linalg.matvec(np.eye(3), np.ones(4))


def test_as_matrix_keeps_sparse_and_densifies_lists():
    assert sp.issparse(linalg.as_matrix(sp.eye_array(3)))
    M = linalg.as_matrix([[1, 2], [3, 4]])
    assert isinstance(M, np.ndarray) and M.dtype == np.float64


@pytest.mark.parametrize("seed", range(5))
def test_matrix_norm2_against_svd(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((40, 40))
    exact = np.linalg.norm(A, 2)
    assert abs(linalg.matrix_norm2(A) - exact) <= 1e-6 * exact


def test_matrix_norm2_grcar_and_zero():
    A = linalg.grcar(100, 5)
    exact = np.linalg.norm(A.toarray(), 2)
    assert math.isclose(linalg.matrix_norm2(A), exact, rel_tol=1e-7)
    assert linalg.matrix_norm2(sp.csr_array((5, 5))) == 0.0


def test_matrix_norm2_reports_non_convergence():
    A = np.diag([1.0, 0.999999])
    A[0, 1] = 1e-3
    with pytest.raises(linalg.ConvergenceError) as info:
        linalg.matrix_norm2(A, tol=1e-15, maxiter=3)
    assert info.value.estimate > 0


@pytest.mark.parametrize("smin", [1e-6, 1e-3, 0.2])
def test_sigma_min_against_inverse_iteration(smin):
    rng = np.random.default_rng(4)
    U, _ = np.linalg.qr(rng.standard_normal((50, 50)))
    W, _ = np.linalg.qr(rng.standard_normal((50, 50)))
    s = np.linspace(1.0, 10.0, 50)
    s[-1] = smin
    A = (U * s) @ W.T
    assert math.isclose(linalg.sigma_min(A), inverse_iteration_sigma_min(A), rel_tol=1e-8)


def test_sigma_min_wide_matrix_is_zero():
    assert linalg.sigma_min(np.ones((2, 3))) == 0.0


def test_grcar_structure():
    A = linalg.grcar(4, 1).toarray()
    expected = np.array([[1, 1, 0, 0], [-1, 1, 1, 0], [0, -1, 1, 1], [0, 0, -1, 1]], float)
    assert np.array_equal(A, expected)
    assert linalg.grcar(4, 1).nnz == 10
    assert linalg.grcar(100, 5).nnz == 684


def test_grcar_rejects_bad_parameters():
    with pytest.raises(ValueError):
        linalg.grcar(0, 3)
    with pytest.raises(ValueError):
        linalg.grcar(5, -1)


def test_sine_rhs():
    A = linalg.grcar(10, 2)
    assert np.allclose(linalg.sine_rhs(A), A @ np.sin(np.arange(1, 11)))


def _random_hessenberg(rng, k):
    H = np.triu(rng.standard_normal((k + 1, k)), -1)
    idx = np.arange(k)
    H[idx + 1, idx] = np.abs(H[idx + 1, idx]) + 0.05
    return H


@settings(max_examples=60, deadline=None)
@given(k=st.integers(1, 25), seed=st.integers(0, 2 ** 32 - 1),
       beta=st.floats(1e-3, 1e3))
def test_givens_residuals_match_least_squares(k, seed, beta):
    rng = np.random.default_rng(seed)
    H = _random_hessenberg(rng, k)
    qr = linalg.GivensQR(beta, capacity=2)
    got = []
    for j in range(k):
        qr.update(H[:j + 1, j], H[j + 1, j])
        got.append(qr.residual_norm)
    ref = givens_lsq_reference(H, beta)
    assert np.allclose(got, ref, rtol=1e-9, atol=1e-12 * beta)
    rhs = np.zeros(k + 1)
    rhs[0] = beta
    y_ref = np.linalg.lstsq(H, rhs, rcond=None)[0]
    assert np.allclose(qr.solution(), y_ref, rtol=1e-7, atol=1e-9 * np.abs(y_ref).max())


def test_givens_residual_nonincreasing_and_rotations_orthonormal():
    rng = np.random.default_rng(3)
    H = _random_hessenberg(rng, 12)
    qr = linalg.GivensQR(2.0)
    prev = 2.0
    for j in range(12):
        qr.update(H[:j + 1, j], H[j + 1, j])
        assert qr.residual_norm <= prev * (1 + 1e-15)
        prev = qr.residual_norm
    assert np.allclose(np.square(qr.cosines) + np.square(qr.sines), 1.0)


def test_givens_rejects_negative_subdiagonal():
    qr = linalg.GivensQR(1.0)
    with pytest.raises(ValueError):
        qr.update(np.array([1.0]), -1.0)


def test_hessenberg_lsq_update_returns_solution_and_residual():
    qr = linalg.GivensQR(1.0)
    y, t = linalg.hessenberg_lsq_update(qr, np.array([2.0]), 0.0)
    assert np.allclose(y, [0.5]) and t == 0.0
