"""Numerical kernels checked against independent oracles.

Oracles: direct O(N^2) DFT summation for the FFT, Gaussian elimination with
full pivoting for the Hermitian solve, and a two-sided Jacobi eigensolver on
A^H A for the singular values (the production SVD is one-sided on A, a
different code path).
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from usproc.errors import AdjointMismatchError, SingularMatrixError
from usproc.numerics import fft, operator_norm, solve_hermitian, svd

from oracles import dft_direct, eigvals_jacobi_hermitian, solve_full_pivot


def rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# ---------------------------------------------------------------------------
# FFT


class TestFft:
    def test_impulse_flat_spectrum(self):
        assert np.allclose(fft([1, 0, 0, 0]), np.ones(4), atol=1e-15)

    def test_constant_is_dc_only(self):
        c = 2.5 - 1.0j
        out = fft([c, c, c, c])
        assert np.allclose(out, [4 * c, 0, 0, 0], atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 12, 17, 64, 100])
    def test_matches_direct_dft(self, n):
        rng = np.random.default_rng(n)
        x = rand_complex(rng, n)
        assert np.max(np.abs(fft(x) - dft_direct(x))) \
            <= 1e-12 * max(np.abs(dft_direct(x)).max(), 1.0)
        assert np.max(np.abs(fft(x, inverse=True) - dft_direct(x, inverse=True))) \
            <= 1e-12

    def test_round_trip_length_12(self):
        rng = np.random.default_rng(42)
        x = rand_complex(rng, 12)
        back = fft(fft(x), inverse=True)
        assert np.max(np.abs(back - x)) < 1e-12

    @given(st.integers(min_value=1, max_value=96), st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_parseval(self, n, seed):
        rng = np.random.default_rng(seed)
        x = rand_complex(rng, n)
        lhs = np.sum(np.abs(fft(x)) ** 2)
        rhs = n * np.sum(np.abs(x) ** 2)
        assert abs(lhs - rhs) <= 1e-10 * max(rhs, 1.0)


# ---------------------------------------------------------------------------
# Hermitian solve


class TestSolveHermitian:
    def test_identity(self):
        x = solve_hermitian(np.eye(2), np.array([3.0, 4.0]), 0.0)
        assert np.allclose(x, [3.0, 4.0], atol=1e-14)

    def test_diagonal(self):
        x = solve_hermitian(np.diag([1.0, 4.0]), np.array([1.0, 1.0]), 0.0)
        assert np.allclose(x, [1.0, 0.25], atol=1e-14)

    def test_random_pd_matches_full_pivot_oracle(self):
        rng = np.random.default_rng(7)
        m = rand_complex(rng, 6, 6)
        a = m @ m.conj().T + 0.5 * np.eye(6)
        b = rand_complex(rng, 6)
        x = solve_hermitian(a, b, 0.0)
        assert np.allclose(x, solve_full_pivot(a, b), atol=1e-10)
        resid = np.sqrt(np.sum(np.abs(a @ x - b) ** 2))
        bound = 1e-10 * np.max(np.abs(a)) * max(np.sqrt(np.sum(np.abs(x) ** 2)), 1)
        assert resid <= bound

    def test_loading_equals_shifted_solve(self):
        rng = np.random.default_rng(8)
        m = rand_complex(rng, 5, 5)
        a = m @ m.conj().T
        b = rand_complex(rng, 5)
        delta = 0.37
        x1 = solve_hermitian(a, b, delta)
        x2 = solve_hermitian(a + delta * np.eye(5), b, 0.0)
        assert np.allclose(x1, x2, atol=1e-12)

    def test_singular_raises(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0]])  # rank 1
        with pytest.raises(SingularMatrixError, match="singular-matrix"):
            solve_hermitian(a, np.array([1.0, 0.0]), 0.0)

    def test_loading_rescues_singular(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        x = solve_hermitian(a, np.array([1.0, 1.0]), 0.1)
        assert np.allclose((a + 0.1 * np.eye(2)) @ x, [1.0, 1.0], atol=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            solve_hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]),
                            np.array([1.0, 1.0]), 0.0)


# ---------------------------------------------------------------------------
# SVD


class TestSvd:
    def test_diagonal(self):
        res = svd(np.diag([5.0, 1.0]))
        assert np.allclose(res.singular_values, [5.0, 1.0], atol=1e-14)

    def test_zero_matrix(self):
        res = svd(np.zeros((3, 4)))
        assert np.array_equal(res.singular_values, np.zeros(3))
        assert np.allclose(res.u.conj().T @ res.u, np.eye(3), atol=1e-12)

    def test_random_reconstruction_and_eig_oracle(self):
        rng = np.random.default_rng(5)
        a = rand_complex(rng, 8, 5)
        res = svd(a)
        fro = np.sqrt(np.sum(np.abs(a) ** 2))
        assert np.sqrt(np.sum(np.abs(res.compose() - a) ** 2)) <= 1e-10 * fro
        lam = eigvals_jacobi_hermitian(a.conj().T @ a)
        assert np.allclose(res.singular_values,
                           np.sqrt(np.clip(lam, 0.0, None)), atol=1e-9)

    def test_wide_matrix(self):
        rng = np.random.default_rng(6)
        a = rand_complex(rng, 4, 9)
        res = svd(a)
        assert res.u.shape == (4, 4) and res.v.shape == (9, 4)
        assert np.sqrt(np.sum(np.abs(res.compose() - a) ** 2)) \
            <= 1e-10 * np.sqrt(np.sum(np.abs(a) ** 2))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((6, 4))
        s1 = svd(a).singular_values
        rowp = rng.permutation(6)
        colp = rng.permutation(4)
        s2 = svd(a[rowp][:, colp]).singular_values
        assert np.allclose(s1, s2, atol=1e-10 * max(s1.max(), 1.0))

    def test_rank_one(self):
        u = np.arange(1.0, 8.0)
        v = np.array([2.0, -1.0, 0.5])
        res = svd(np.outer(u, v))
        expected = np.sqrt(np.sum(u ** 2) * np.sum(v ** 2))
        assert np.allclose(res.singular_values,
                           [expected, 0.0, 0.0], atol=1e-10 * expected)
        assert np.allclose(res.u.conj().T @ res.u, np.eye(3), atol=1e-10)


# ---------------------------------------------------------------------------
# Operator norm


class TestOperatorNorm:
    def test_scaled_identity(self):
        est = operator_norm(lambda v: 2.0 * v, lambda v: 2.0 * v, 6, 50)
        assert est == pytest.approx(2.02, abs=1e-12)

    def test_diagonal(self):
        a = np.diag([3.0, 1.0])
        est = operator_norm(lambda v: a @ v, lambda v: a.T @ v, 2, 200)
        assert est == pytest.approx(3.03, rel=0.01)

    def test_matches_svd_oracle(self):
        rng = np.random.default_rng(11)
        a = rand_complex(rng, 10, 10)
        est = operator_norm(lambda v: a @ v, lambda v: a.conj().T @ v, 10, 200)
        assert est == pytest.approx(1.01 * svd(a).singular_values[0], rel=1e-3)

    def test_adjoint_mismatch_detected(self):
        rng = np.random.default_rng(12)
        a = rand_complex(rng, 5, 5)
        with pytest.raises(AdjointMismatchError, match="adjoint-mismatch"):
            operator_norm(lambda v: a @ v, lambda v: a.T @ v, 5, 10)

    def test_zero_operator(self):
        est = operator_norm(lambda v: 0.0 * v, lambda v: 0.0 * v, 4, 10)
        assert est == 0.0
