"""Test quaternion scalars, matrices and the Hermitian eigensolver."""

import numpy as np
import pytest

from quatergcn.core.errors import NotHermitianError, ShapeError
from quatergcn.core.laplacian import build_quaternionic
from quatergcn.core.quaternion import (
    QMatrix,
    Quaternion,
    complex_adjoint,
    conjugate_transpose,
    hermitian_deviation,
    hermitian_eig,
    is_hermitian,
    qmul,
    quadratic_form,
)


def random_qmatrix(rng, rows, cols):
    return QMatrix(*rng.standard_normal((4, rows, cols)))


def random_hermitian(rng, n):
    q = random_qmatrix(rng, n, n)
    return (q + conjugate_transpose(q)).scale(0.5)


class TestQuaternion:
    """Test the scalar Hamilton product."""

    def test_basis_products(self):
        """i*j = k, j*k = i, k*i = j, and every unit squares to -1."""
        i, j, k = Quaternion(0, 1, 0, 0), Quaternion(0, 0, 1, 0), Quaternion(0, 0, 0, 1)
        assert i * j == k
        assert j * k == i
        assert k * i == j
        for unit in (i, j, k):
            assert unit * unit == Quaternion(-1, 0, 0, 0)

    def test_non_commutative(self):
        i, j = Quaternion(0, 1, 0, 0), Quaternion(0, 0, 1, 0)
        assert qmul(j, i) == -qmul(i, j)

    def test_conjugate_reverses_products(self):
        """(ab)* = b* a*."""
        a = Quaternion(1.0, 2.0, -0.5, 3.0)
        b = Quaternion(-2.0, 0.25, 1.5, -1.0)
        assert (a * b).conjugate() == b.conjugate() * a.conjugate()

    def test_norm_is_multiplicative(self):
        a = Quaternion(1.0, 2.0, -0.5, 3.0)
        b = Quaternion(-2.0, 0.25, 1.5, -1.0)
        assert (a * b).norm2() == pytest.approx(a.norm2() * b.norm2(), rel=1e-14)

    def test_scalar_multiplication(self):
        q = Quaternion(1.0, -2.0, 0.5, 4.0)
        assert 2 * q == Quaternion(2.0, -4.0, 1.0, 8.0)
        assert q * 2 == 2 * q


class TestQMatrix:
    """Test dense quaternion matrix arithmetic."""

    def test_components_are_read_only(self):
        q = QMatrix.identity(3)
        with pytest.raises(ValueError):
            q.comp0[0, 0] = 5.0

    def test_mismatched_component_shapes(self):
        with pytest.raises(ShapeError):
            QMatrix(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)))

    def test_matmul_shape_error(self, rng):
        with pytest.raises(ShapeError):
            random_qmatrix(rng, 2, 3) @ random_qmatrix(rng, 2, 3)

    def test_matmul_matches_entrywise_products(self, rng):
        """Every entry of A @ B is the sum of scalar Hamilton products."""
        a, b = random_qmatrix(rng, 3, 4), random_qmatrix(rng, 4, 2)
        c = a @ b
        for u in range(3):
            for v in range(2):
                expected = Quaternion()
                for w in range(4):
                    expected = expected + a.entry(u, w) * b.entry(w, v)
                assert np.allclose(c.entry(u, v).components, expected.components, atol=1e-13)

    def test_matmul_not_commutative(self, rng):
        a, b = random_qmatrix(rng, 3, 3), random_qmatrix(rng, 3, 3)
        assert (a @ b).max_abs_diff(b @ a) > 1e-6

    def test_from_entries(self):
        q = QMatrix.from_entries([[Quaternion(1, 2, 3, 4), Quaternion()], [Quaternion(0, 0, 0, -1), Quaternion(5)]])
        assert q.shape == (2, 2)
        assert q.entry(0, 0) == Quaternion(1, 2, 3, 4)
        assert q.entry(1, 0) == Quaternion(0, 0, 0, -1)

    def test_complex_adjoint_is_multiplicative(self, rng):
        """chi(AB) = chi(A) chi(B)."""
        a, b = random_qmatrix(rng, 3, 3), random_qmatrix(rng, 3, 3)
        assert np.allclose(complex_adjoint(a @ b), complex_adjoint(a) @ complex_adjoint(b), atol=1e-12)

    def test_conjugate_transpose_of_product(self, rng):
        """(AB)* = B* A*."""
        a, b = random_qmatrix(rng, 3, 4), random_qmatrix(rng, 4, 2)
        lhs = conjugate_transpose(a @ b)
        rhs = conjugate_transpose(b) @ conjugate_transpose(a)
        assert lhs.allclose(rhs, atol=1e-12)


class TestHermitian:
    """Test Hermitian checks and the eigendecomposition."""

    def test_four_node_laplacian_is_hermitian(self, four_node):
        assert is_hermitian(build_quaternionic(four_node).Lq, tol=0.0)

    def test_deviation_locates_entry(self):
        comps = np.zeros((4, 3, 3))
        comps[2, 0, 2] = 0.5
        comps[2, 2, 0] = 0.25
        deviation, where = hermitian_deviation(QMatrix(*comps))
        assert deviation == 0.75
        assert where in ((0, 2), (2, 0))

    def test_eig_rejects_non_hermitian(self):
        comps = np.zeros((4, 2, 2))
        comps[1, 0, 1] = 1.0
        with pytest.raises(NotHermitianError) as exc:
            hermitian_eig(QMatrix(*comps))
        assert exc.value.deviation == 1.0

    def test_eig_reconstructs_matrix(self, rng):
        q = random_hermitian(rng, 6)
        result = hermitian_eig(q, tol=1e-12)
        assert np.all(np.diff(result.eigenvalues) >= 0)
        assert result.reconstruct().allclose(q, atol=1e-10)

    def test_eigenvectors_are_orthonormal(self, rng):
        q = random_hermitian(rng, 5)
        u = hermitian_eig(q, tol=1e-12).eigenvectors
        assert (conjugate_transpose(u) @ u).allclose(QMatrix.identity(5), atol=1e-10)

    def test_right_eigen_equation(self, rng):
        """Q v = v lambda for every eigenpair."""
        q = random_hermitian(rng, 4)
        result = hermitian_eig(q, tol=1e-12)
        for index, value in enumerate(result.eigenvalues):
            v = result.eigenvectors.column(index)
            assert (q @ v).allclose(v.scale(value), atol=1e-10)

    def test_diagonal_eigenvalues(self):
        result = hermitian_eig(QMatrix.from_real(np.diag([1.0, 2.0, 3.0])), tol=0.0)
        assert np.allclose(result.eigenvalues, [1.0, 2.0, 3.0], atol=1e-12)

    def test_two_node_path_laplacian(self):
        """The Laplacian of a single undirected unit edge has spectrum {0, 2}."""
        result = hermitian_eig(QMatrix.from_real(np.array([[1.0, -1.0], [-1.0, 1.0]])), tol=0.0)
        assert np.allclose(result.eigenvalues, [0.0, 2.0], atol=1e-12)

    def test_degenerate_spectrum(self):
        """The identity has one repeated eigenvalue and still folds to an orthonormal basis."""
        result = hermitian_eig(QMatrix.identity(4))
        assert np.allclose(result.eigenvalues, 1.0)
        u = result.eigenvectors
        assert (conjugate_transpose(u) @ u).allclose(QMatrix.identity(4), atol=1e-12)

    def test_quadratic_form_is_real_for_hermitian(self, rng):
        q = random_hermitian(rng, 4)
        x = random_qmatrix(rng, 4, 1)
        value = quadratic_form(q, x)
        assert abs(value.i1) < 1e-12 and abs(value.i2) < 1e-12 and abs(value.i3) < 1e-12

    def test_eigenvalues_match_four_node_adjoint(self, four_node):
        lq = build_quaternionic(four_node).Lq
        values = hermitian_eig(lq).eigenvalues
        doubled = np.linalg.eigvalsh(complex_adjoint(lq))
        assert np.allclose(np.repeat(values, 2), doubled, atol=1e-10)
