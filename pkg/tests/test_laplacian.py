"""Test the quaternionic Laplacian against the worked four-node example and the equivalence theorems."""

import numpy as np
import pytest

from quatergcn.core.errors import InvalidConfigError, IsolatedNodeError
from quatergcn.core.graph import Digraph
from quatergcn.core.laplacian import (
    build_quaternionic,
    classical_laplacian,
    classical_propagation_matrix,
    matrix_text,
    normalize,
    propagation_for,
    propagation_matrix,
    sign_magnetic_laplacian,
    sign_magnetic_propagation_matrix,
    sign_magnetic_decomposition,
)
from quatergcn.core.quaternion import QMatrix, hermitian_eig, is_hermitian
from quatergcn.core.verifier import regime_graph
from quatergcn.utils.formats import parse_qmatrix

FOUR_NODE_LQ = QMatrix(
    np.array([[2.5, -1.0, 0, 0], [-1.0, 3.0, 0, 0], [0, 0, 4.5, 0], [0, 0, 0, 5.0]]),
    np.array([[0, 0, 1.5, 0], [0, 0, 0, 0], [-1.5, 0, 0, 0], [0, 0, 0, 0]]),
    np.array([[0, 0, 0, 0], [0, 0, 0, -1.5], [0, 0, 0, -0.5], [0, 1.5, 0.5, 0]]),
    np.array([[0, 0, 0, 0], [0, 0, 0, 0.5], [0, 0, 0, 2.5], [0, -0.5, -2.5, 0]]),
)


class TestFourNodeGraph:
    """Exact reproduction of every intermediate matrix of the four-node example."""

    def test_laplacian_exact(self, four_node):
        assert build_quaternionic(four_node).Lq.allclose(FOUR_NODE_LQ, atol=0.0)

    def test_degrees(self, four_node):
        assert build_quaternionic(four_node).Dbar.tolist() == [2.5, 3.0, 4.5, 5.0]

    def test_symmetrized_adjacencies(self, four_node):
        bundle = build_quaternionic(four_node)
        assert bundle.As1[0].tolist() == [0.0, 1.0, 1.5, 0.0]
        assert bundle.As2[1, 3] == 1.5
        assert bundle.As3[2, 3] == 2.5

    def test_digon_matrix(self, four_node):
        o = build_quaternionic(four_node).O
        off = o - np.diag(np.diag(o))
        expected = np.zeros((4, 4))
        for u, v in ((0, 1), (1, 3), (2, 3)):
            expected[u, v] = expected[v, u] = 1
        assert np.array_equal(off, expected)

    def test_h_components(self, four_node):
        bundle = build_quaternionic(four_node)
        h2 = np.array([[0, 0, 0, 0], [0, 0, 0, 1], [0, 0, 0, 1], [0, -1, -1, 0]])
        assert np.array_equal(bundle.H2, h2)
        assert np.array_equal(bundle.H3, -h2)
        assert np.array_equal(bundle.H0, [[1, 1, 0, 1], [1, 1, 1, 0], [0, 1, 1, 0], [1, 0, 0, 1]])
        h1 = np.zeros((4, 4))
        h1[0, 2], h1[2, 0] = -1, 1
        assert np.array_equal(bundle.H1, h1)

    def test_normalized_entry(self, four_node):
        lq_norm = build_quaternionic(four_node).Lq_norm
        assert lq_norm.comp0[0, 1] == pytest.approx(-1.0 / np.sqrt(2.5 * 3.0), abs=1e-15)
        assert np.allclose(np.diag(lq_norm.comp0), 1.0)

    def test_sign_magnetic_collapses_digon(self, four_node):
        """The asymmetric digon (1, 3) becomes -2i under the sign-magnetic Laplacian."""
        lsigma = sign_magnetic_laplacian(four_node).Lsigma
        assert lsigma[1, 3] == -2j
        lq = build_quaternionic(four_node).Lq
        assert lq.entry(1, 3).components == (0.0, 0.0, -1.5, 0.5)

    def test_classical_laplacian(self, four_node):
        lap = classical_laplacian(four_node)
        assert np.diag(lap).tolist() == [2.5, 3.0, 4.5, 5.0]
        assert np.allclose(lap.sum(axis=1), 0.0)

    def test_matrix_text_round_trip_is_exact(self, four_node):
        assert parse_qmatrix(matrix_text(four_node, "quaternionic")).allclose(FOUR_NODE_LQ, atol=0.0)


class TestEquivalences:
    """Equivalences with the classical and sign-magnetic Laplacians."""

    @pytest.mark.parametrize("seed", range(5))
    def test_undirected_matches_classical(self, seed):
        g = regime_graph("undirected", seed)
        lq = build_quaternionic(g).Lq
        assert np.array_equal(lq.comp0, classical_laplacian(g))
        assert not lq.comp1.any() and not lq.comp2.any() and not lq.comp3.any()

    @pytest.mark.parametrize("seed", range(5))
    def test_without_asymmetric_digons_matches_sign_magnetic(self, seed):
        g = regime_graph("symmetric-digon", seed)
        lq = build_quaternionic(g).Lq
        lsigma = sign_magnetic_laplacian(g).Lsigma
        assert np.allclose(lq.comp0, lsigma.real, atol=1e-12)
        assert np.allclose(lq.comp1, lsigma.imag, atol=1e-12)
        assert not lq.comp2.any() and not lq.comp3.any()

    def test_without_symmetric_digons_decomposes(self):
        a = np.array(
            [
                [0.0, 2.0, 0.0, 1.0],
                [4.0, 0.0, 3.0, 0.0],
                [0.0, 0.0, 0.0, -2.0],
                [0.0, 5.0, 1.0, 0.0],
            ]
        )
        g = Digraph(a)
        assert build_quaternionic(g).Hq.allclose(sign_magnetic_decomposition(g), atol=1e-12)

    def test_mixed_sign_digon_is_indefinite(self):
        """Opposite weights on a digon give zero degree and a +-|H| spectrum."""
        g = Digraph(np.array([[0.0, 3.0], [-3.0, 0.0]]))
        bundle = build_quaternionic(g)
        assert bundle.Dbar.tolist() == [0.0, 0.0]
        assert bundle.Lq_norm is None
        values = hermitian_eig(bundle.Lq).eigenvalues
        assert values[0] == pytest.approx(-1.5 * np.sqrt(2), rel=1e-12)
        assert values[1] == pytest.approx(1.5 * np.sqrt(2), rel=1e-12)

    @pytest.mark.parametrize("regime", ["undirected", "symmetric-digon", "signed-digon"])
    def test_propagation_shares_hermitian_part(self, regime):
        """The renormalized propagation matrix is ``(Hq + I)`` scaled by ``(Dbar + 1)^-1/2``."""
        g = regime_graph(regime, 6)
        bundle = build_quaternionic(g)
        d = 1.0 / np.sqrt(bundle.Dbar + 1.0)
        expected = (bundle.Hq + QMatrix.identity(g.n)).scale(np.outer(d, d))
        assert propagation_matrix(g).allclose(expected, atol=1e-14)

    def test_bundle_hermitian_part_from_components(self, four_node):
        b = build_quaternionic(four_node)
        expected = QMatrix(b.As1 * b.H0, b.As1 * b.H1, b.As2 * b.H2, b.As3 * b.H3)
        assert b.Hq.allclose(expected, atol=0.0)

    @pytest.mark.parametrize("regime", ["undirected", "symmetric-digon", "signed-digon"])
    def test_hermitian_by_construction(self, regime):
        bundle = build_quaternionic(regime_graph(regime, 3))
        assert is_hermitian(bundle.Hq) and is_hermitian(bundle.Lq)


class TestNormalization:
    """Test the normalized Laplacian and the propagation matrices."""

    def test_isolated_node(self):
        a = np.zeros((3, 3))
        a[0, 1] = 1.0
        bundle = build_quaternionic(Digraph(a))
        assert bundle.Lq_norm is None
        with pytest.raises(IsolatedNodeError) as exc:
            normalize(bundle)
        assert exc.value.node == 2

    def test_propagation_adds_self_loops(self, four_node):
        p = propagation_matrix(four_node)
        d = np.array([3.5, 4.0, 5.5, 6.0])
        assert np.allclose(np.diag(p.comp0), 1.0 / d)
        assert p.comp1[0, 2] == pytest.approx(-1.5 / np.sqrt(3.5 * 5.5), abs=1e-15)
        assert np.all(np.diag(p.comp2) == 0) and np.all(np.diag(p.comp3) == 0)

    def test_propagation_of_isolated_node(self):
        p = propagation_matrix(Digraph(np.zeros((2, 2))))
        assert p.allclose(QMatrix.identity(2), atol=0.0)

    def test_baselines_are_quaternion_embeddings(self, four_node):
        classical = classical_propagation_matrix(four_node)
        magnetic = sign_magnetic_propagation_matrix(four_node)
        assert not classical.comp1.any() and not classical.comp2.any()
        assert not magnetic.comp2.any() and not magnetic.comp3.any()
        assert magnetic.comp1.any()

    def test_propagation_for_unknown(self, four_node):
        with pytest.raises(InvalidConfigError):
            propagation_for(four_node, "hodge")

    def test_matrix_text_unknown_kind(self, four_node):
        with pytest.raises(InvalidConfigError):
            matrix_text(four_node, "adjacency")
