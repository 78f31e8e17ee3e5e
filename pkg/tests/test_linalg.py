import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfrkit import linalg


def crandn(rng, m, n):
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


def test_identity_singular_values():
    f = linalg.svd(np.eye(3))
    assert np.allclose(f.sigma, 1.0)


def test_sorted_diagonal():
    f = linalg.svd(np.diag([3.0, 4.0]))
    assert f.sigma == pytest.approx([4.0, 3.0])


@pytest.mark.parametrize("shape", [(10, 6), (6, 10), (1, 5), (5, 1), (17, 17)])
def test_reconstruction_and_orthogonality(shape):
    rng = np.random.default_rng(42)
    a = crandn(rng, *shape)
    f = linalg.svd(a)
    k = min(shape)
    assert np.linalg.norm(a - f.reconstruct()) <= 1e-10 * np.linalg.norm(a)
    assert np.linalg.norm(f.u.conj().T @ f.u - np.eye(k)) <= 1e-10 * k
    assert np.linalg.norm(f.v.conj().T @ f.v - np.eye(k)) <= 1e-10 * k
    assert np.all(np.diff(f.sigma) <= 0) and np.all(f.sigma >= 0)


def test_singular_values_match_lapack():
    rng = np.random.default_rng(7)
    a = crandn(rng, 30, 12)
    assert np.allclose(linalg.svd(a).sigma, np.linalg.svd(a, compute_uv=False), rtol=1e-12)


def test_rank_deficient_basis_is_completed():
    rng = np.random.default_rng(3)
    a = crandn(rng, 8, 2) @ crandn(rng, 2, 5)
    f = linalg.svd(a)
    assert np.sum(f.sigma > 1e-10 * f.sigma[0]) == 2
    assert np.allclose(f.u.conj().T @ f.u, np.eye(5), atol=1e-10)
    assert np.allclose(f.reconstruct(), a, atol=1e-10)


def test_pinv_unitary():
    rng = np.random.default_rng(5)
    q = linalg.svd(crandn(rng, 6, 6)).u
    assert np.allclose(linalg.pinv(q), q.conj().T, atol=1e-10)


def test_pinv_zero_matrix():
    p = linalg.pinv(np.zeros((3, 2)))
    assert p.shape == (2, 3)
    assert np.all(p == 0)


def test_pinv_truncation():
    p = linalg.pinv(np.diag([1.0, 1e-9]), rel_tol=1e-3)
    assert np.allclose(p, np.diag([1.0, 0.0]))


def test_pinv_bad_tolerance():
    with pytest.raises(ValueError):
        linalg.pinv(np.eye(2), rel_tol=0.0)


def test_matmul_examples():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(linalg.matmul(a, np.eye(2)), a)
    assert linalg.matmul(np.array([[1, 1j]]), np.array([[1], [1j]]))[0, 0] == 0


def test_matmul_associativity():
    rng = np.random.default_rng(11)
    a, b, c = (crandn(rng, 4, 4) for _ in range(3))
    left = linalg.matmul(linalg.matmul(a, b), c)
    right = linalg.matmul(a, linalg.matmul(b, c))
    assert np.linalg.norm(left - right) <= 1e-12 * np.linalg.norm(left)


def test_matmul_shape_mismatch():
    with pytest.raises(ValueError):
        linalg.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_input_validation():
    with pytest.raises(ValueError):
        linalg.svd(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        linalg.svd(np.zeros((0, 3)))


@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 9), n=st.integers(1, 9), seed=st.integers(0, 2**31))
def test_sigma_invariant_under_adjoint(m, n, seed):
    a = crandn(np.random.default_rng(seed), m, n)
    assert np.allclose(linalg.svd(a).sigma, linalg.svd(a.conj().T).sigma, atol=1e-12 * max(1, np.abs(a).max()))


@settings(max_examples=30, deadline=None)
@given(m=st.integers(3, 8), n=st.integers(1, 3), seed=st.integers(0, 2**31))
def test_pinv_solves_least_squares(m, n, seed):
    rng = np.random.default_rng(seed)
    a = crandn(rng, m, n)
    b = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    x = linalg.matmul(linalg.pinv(a), b)
    r0 = np.linalg.norm(a @ x - b)
    eps = 1e-4
    for j in range(n):
        for step in (eps, -eps, 1j * eps, -1j * eps):
            xp = x.copy()
            xp[j] += step
            assert np.linalg.norm(a @ xp - b) >= r0 - 1e-9
