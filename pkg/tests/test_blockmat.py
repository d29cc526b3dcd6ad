import numpy as np
import pytest

from bcdlms.blockmat import (BlockSpec, ShapeError, SingularMatrixError,
                             block_kron, bvec, kron, solve, spectral_radius,
                             unbvec)


def rng(seed=0):
    return np.random.default_rng(seed)


def random_complex(shape, seed=0):
    g = rng(seed)
    return g.standard_normal(shape) + 1j * g.standard_normal(shape)


class TestKron:
    def test_identity(self):
        assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_scalar_scaling(self):
        b = random_complex((3, 2), seed=1)
        assert np.allclose(kron([[2.0]], b), 2.0 * b)

    def test_permutation_block_structure(self):
        # hand expansion of a_{ij} * B for the 2x2 swap matrix
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = kron(swap, np.eye(2))
        expected = np.zeros((4, 4))
        expected[0:2, 2:4] = np.eye(2)
        expected[2:4, 0:2] = np.eye(2)
        assert np.array_equal(out, expected)


class TestBlockKron:
    def test_single_block_reduces_to_kron(self):
        spec = BlockSpec(1, 3)
        a = random_complex((3, 3), seed=2)
        b = random_complex((3, 3), seed=3)
        assert np.allclose(block_kron(a, b, spec), kron(a, b), atol=1e-14)

    def test_identity(self):
        spec = BlockSpec(2, 2)
        eye = np.eye(spec.dim)
        assert np.allclose(block_kron(eye, eye, spec), np.eye(spec.vec_dim))

    @pytest.mark.parametrize("n,m,seed", [(2, 2, 4), (3, 2, 5)])
    def test_bvec_identity(self, n, m, seed):
        # bvec(A S B) == (B^T (x)_b A) bvec(S): the load-bearing identity
        spec = BlockSpec(n, m)
        a = random_complex((spec.dim, spec.dim), seed=seed)
        s = random_complex((spec.dim, spec.dim), seed=seed + 50)
        b = random_complex((spec.dim, spec.dim), seed=seed + 100)
        lhs = bvec(a @ s @ b, spec)
        rhs = block_kron(b.T, a, spec) @ bvec(s, spec)
        scale = np.linalg.norm(lhs)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * scale

    def test_weighted_square_identity(self):
        # bvec(B^H S B) == (B^T (x)_b B^H) bvec(S), the variance-relation form
        spec = BlockSpec(2, 2)
        b = random_complex((4, 4), seed=7)
        s = random_complex((4, 4), seed=8)
        lhs = bvec(b.conj().T @ s @ b, spec)
        rhs = block_kron(b.T, b.conj().T, spec) @ bvec(s, spec)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_dimension_mismatch(self):
        spec = BlockSpec(2, 2)
        with pytest.raises(ShapeError):
            block_kron(np.eye(3), np.eye(4), spec)


class TestBvec:
    def test_single_block_is_column_major_vec(self):
        spec = BlockSpec(1, 2)
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(bvec(x, spec), np.array([1, 3, 2, 4], dtype=complex))

    def test_round_trip(self):
        spec = BlockSpec(3, 2)
        x = random_complex((6, 6), seed=9)
        assert np.array_equal(unbvec(bvec(x, spec), spec), x)
        v = random_complex((36,), seed=10)
        assert np.array_equal(bvec(unbvec(v, spec), spec), v)

    def test_unbvec_basis_vector(self):
        spec = BlockSpec(1, 2)
        v = np.zeros(4)
        v[0] = 1.0
        assert np.array_equal(unbvec(v, spec), np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_unbvec_block_bookkeeping(self):
        # independent index oracle: block (i, j) entry (a, b) sits at
        # j*(N*M*M) + i*(M*M) + b*M + a
        spec = BlockSpec(2, 2)
        v = random_complex((16,), seed=11)
        x = unbvec(v, spec)
        n, m = 2, 2
        for i in range(n):
            for j in range(n):
                for a in range(m):
                    for b in range(m):
                        pos = j * (n * m * m) + i * (m * m) + b * m + a
                        assert x[i * m + a, j * m + b] == v[pos]

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            unbvec(np.zeros(10), BlockSpec(2, 2))


class TestSpectralRadius:
    def test_diagonal(self):
        assert spectral_radius(np.diag([0.5, -0.9])) == pytest.approx(0.9)

    def test_identity(self):
        assert spectral_radius(np.eye(4)) == pytest.approx(1.0)

    def test_companion_matrix_against_quadratic_formula(self):
        # z^2 - 0.5 z - 0.25: companion matrix roots vs closed form
        comp = np.array([[0.5, 0.25], [1.0, 0.0]])
        roots = np.roots([1.0, -0.5, -0.25])
        assert spectral_radius(comp) == pytest.approx(np.abs(roots).max(), rel=1e-10)

    def test_bounded_by_row_sum_norm(self):
        for seed in range(8):
            x = random_complex((6, 6), seed=seed)
            row_sum = np.abs(x).sum(axis=1).max()
            assert spectral_radius(x) <= row_sum + 1e-12

    def test_non_square(self):
        with pytest.raises(ShapeError):
            spectral_radius(np.zeros((2, 3)))


class TestSolve:
    def test_identity(self):
        b = random_complex((4, 2), seed=12)
        assert np.allclose(solve(np.eye(4), b), b)

    def test_scaled_identity(self):
        b = np.ones((3, 1))
        assert np.allclose(solve(2.0 * np.eye(3), b), 0.5 * b)

    def test_residual_on_random_system(self):
        a = random_complex((8, 8), seed=13) + 8.0 * np.eye(8)
        b = random_complex((8,), seed=14)
        x = solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-8 * np.linalg.norm(b)

    def test_hermitian_preservation(self):
        # commuting Hermitian pair (rhs a polynomial in a), where the exact
        # solution a + a^{-1} is Hermitian: rounding must not break symmetry
        g = rng(15)
        a = g.standard_normal((5, 5)) + 1j * g.standard_normal((5, 5))
        a = a @ a.conj().T + 5.0 * np.eye(5)
        rhs = a @ a + np.eye(5)
        x = solve(a, rhs)
        sym_err = np.abs(x - x.conj().T).max()
        assert sym_err <= 1e-10 * np.abs(x).max()

    def test_singular_raises_distinctly(self):
        singular = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(SingularMatrixError):
            solve(singular, np.ones(2))
        with pytest.raises(ShapeError):
            solve(np.eye(2), np.ones(3))

    def test_nonfinite_rejected(self):
        bad = np.array([[np.inf, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            solve(bad, np.ones(2))


def test_blockspec_validation():
    with pytest.raises(ValueError):
        BlockSpec(0, 2)
    spec = BlockSpec(3, 2)
    assert spec.dim == 6 and spec.vec_dim == 36
