"""Test graph I/O, DSBM generation, degree features and splits."""

import numpy as np
import pytest

from quatergcn.core.config import DsbmConfig
from quatergcn.core.errors import GraphFormatError, InvalidConfigError, ShapeError, SplitError
from quatergcn.core.graph import (
    Digraph,
    canonical_adjacency,
    degree_features,
    digon_fraction,
    fold_node_split,
    format_edge_list,
    generate_dsbm,
    parse_edge_list,
    read_labels,
    split_edges,
    split_nodes,
    transpose,
)

from .conftest import FOUR_NODE_ADJACENCY


class TestEdgeList:
    """Test edge-list parsing and formatting."""

    def test_parse_four_node_graph(self, four_node_path):
        with four_node_path.open() as handle:
            g = parse_edge_list(handle)
        assert np.array_equal(g.adjacency, FOUR_NODE_ADJACENCY)
        assert g.edge_count == 7

    def test_duplicate_lines_add_up(self):
        g = parse_edge_list("0 1 2\n0 1 3\n")
        assert g.adjacency[0, 1] == 5.0

    def test_header_fixes_node_count(self):
        g = parse_edge_list("# n=5\n0\t1\t1.5\n")
        assert g.n == 5

    def test_self_loop_reports_line(self):
        with pytest.raises(GraphFormatError, match="line 2"):
            parse_edge_list("0 1 1\n2 2 1\n")

    def test_malformed_line(self):
        with pytest.raises(GraphFormatError, match="line 1"):
            parse_edge_list("0 1\n")

    def test_node_out_of_declared_range(self):
        with pytest.raises(GraphFormatError, match="out of range"):
            parse_edge_list("# n=2\n0 3 1\n")

    def test_non_finite_weight(self):
        with pytest.raises(GraphFormatError):
            parse_edge_list("0 1 nan\n")

    def test_empty_edge_list(self):
        with pytest.raises(GraphFormatError):
            parse_edge_list("")

    def test_format_then_parse_keeps_graph(self, four_node):
        assert np.array_equal(parse_edge_list(format_edge_list(four_node)).adjacency, four_node.adjacency)


class TestDigraph:
    """Test the graph container."""

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            Digraph(np.zeros((2, 3)))

    def test_rejects_self_loops(self):
        with pytest.raises(GraphFormatError):
            Digraph(np.eye(3))

    def test_labels_must_cover_nodes(self):
        with pytest.raises(ShapeError):
            Digraph(np.zeros((3, 3)), labels=[0, 1])

    def test_read_labels(self):
        labels = read_labels("0\t1\n2\t0\n1\t2\n", 3)
        assert labels.tolist() == [1, 2, 0]

    def test_read_labels_missing_node(self):
        with pytest.raises(GraphFormatError, match="no label"):
            read_labels("0\t1\n", 2)

    def test_read_labels_twice(self):
        with pytest.raises(GraphFormatError, match="line 2"):
            read_labels("0 1\n0 2\n", 1)


class TestDegreeFeatures:
    """Test the (in-degree, out-degree) features."""

    def test_four_node_graph(self, four_node):
        x = degree_features(four_node)
        assert x.tolist() == [[4, 1], [2, 4], [5, 4], [4, 6]]

    def test_use_abs(self):
        g = Digraph(np.array([[0.0, -2.0], [3.0, 0.0]]))
        assert degree_features(g).tolist() == [[3, -2], [-2, 3]]
        assert degree_features(g, use_abs=True).tolist() == [[3, 2], [2, 3]]

    def test_transpose_swaps_columns(self, four_node):
        x = degree_features(four_node)
        assert np.array_equal(degree_features(transpose(four_node)), x[:, ::-1])


class TestDsbm:
    """Test the directed stochastic block model generator."""

    def test_deterministic(self):
        cfg = DsbmConfig(nodes_per_cluster=10, clusters=3, seed=7)
        assert np.array_equal(generate_dsbm(cfg).adjacency, generate_dsbm(cfg).adjacency)

    def test_seed_changes_graph(self):
        a = generate_dsbm(DsbmConfig(nodes_per_cluster=10, clusters=3, seed=1)).adjacency
        b = generate_dsbm(DsbmConfig(nodes_per_cluster=10, clusters=3, seed=2)).adjacency
        assert not np.array_equal(a, b)

    def test_labels_are_clusters(self):
        g = generate_dsbm(DsbmConfig(nodes_per_cluster=4, clusters=3))
        assert g.labels.tolist() == [0] * 4 + [1] * 4 + [2] * 4

    def test_weights_in_range(self):
        g = generate_dsbm(DsbmConfig(nodes_per_cluster=20, clusters=3, weight_low=2, weight_high=4, seed=3))
        weights = g.adjacency[g.adjacency != 0]
        assert weights.size > 0
        assert weights.min() >= 2 and weights.max() <= 4
        assert np.all(weights == np.round(weights))

    def test_no_digons_when_delta_zero(self):
        g = generate_dsbm(DsbmConfig(nodes_per_cluster=20, clusters=3, digon_fraction=0.0, seed=4))
        assert digon_fraction(g) == 0.0

    def test_all_digons_when_delta_one(self):
        g = generate_dsbm(DsbmConfig(nodes_per_cluster=10, clusters=3, digon_fraction=1.0, seed=4))
        assert digon_fraction(g) == 1.0

    def test_digon_fraction_close_to_delta(self):
        g = generate_dsbm(DsbmConfig.preset("di150", seed=11))
        assert abs(digon_fraction(g) - 0.2) < 0.05

    def test_direction_probability_orients_clusters(self):
        """With beta = 0 every inter-cluster edge points from the later cluster to the earlier one."""
        cfg = DsbmConfig(nodes_per_cluster=10, clusters=2, inter_prob=1.0, direction_prob=0.0, digon_fraction=0.0)
        a = generate_dsbm(cfg).adjacency
        assert np.count_nonzero(a[:10, 10:]) == 0
        assert np.count_nonzero(a[10:, :10]) == 100

    def test_cyclic_meta_graph_is_default(self):
        assert DsbmConfig().meta_graph == "cyclic"
        assert DsbmConfig.preset("di150").meta_graph == "cyclic"
        assert DsbmConfig.preset("di150").n == 750

    @staticmethod
    def _cluster_degree_spread(meta_graph: str) -> float:
        """Largest relative gap between per-cluster mean in- or out-degrees over five graphs."""
        features, labels = [], []
        for seed in range(5):
            g = generate_dsbm(DsbmConfig(nodes_per_cluster=40, clusters=5, meta_graph=meta_graph, seed=seed))
            features.append(degree_features(g))
            labels.append(g.labels)
        x, y = np.concatenate(features), np.concatenate(labels)
        means = np.array([x[y == c].mean(axis=0) for c in range(5)])
        return float(((means.max(axis=0) - means.min(axis=0)) / means.mean(axis=0)).max())

    def test_cyclic_degrees_carry_no_cluster_signal(self):
        """Every cluster has the same expected weighted in- and out-degree."""
        assert self._cluster_degree_spread("cyclic") < 0.06

    def test_ordered_degrees_depend_on_cluster(self):
        assert self._cluster_degree_spread("ordered") > 0.5

    def test_edge_frequencies_match_probabilities(self):
        """Connected-pair frequencies over 50 seeds sit within 0.03 of alpha."""
        intra, inter = [], []
        for seed in range(50):
            g = generate_dsbm(DsbmConfig(nodes_per_cluster=10, clusters=3, intra_prob=0.3, inter_prob=0.1, seed=seed))
            connected = (g.adjacency != 0) | (g.adjacency.T != 0)
            same = g.labels[:, None] == g.labels[None, :]
            upper = np.triu(np.ones(same.shape, dtype=bool), k=1)
            intra.append(connected[same & upper])
            inter.append(connected[~same & upper])
        assert abs(np.concatenate(intra).mean() - 0.3) <= 0.03
        assert abs(np.concatenate(inter).mean() - 0.1) <= 0.03

    def test_signed_mode_has_both_signs(self):
        g = generate_dsbm(DsbmConfig(nodes_per_cluster=10, clusters=3, signed=True, seed=5))
        assert np.any(g.adjacency > 0) and np.any(g.adjacency < 0)

    def test_invalid_weight_range(self):
        with pytest.raises(ValueError):
            DsbmConfig(weight_low=5, weight_high=2)

    def test_unknown_preset(self):
        with pytest.raises(InvalidConfigError):
            DsbmConfig.preset("cora")


class TestCanonicalAdjacency:
    """Test the orientation normal form used for reconstruction."""

    def test_flips_single_negative_edges(self):
        a = np.zeros((3, 3))
        a[0, 2] = -2.0
        a[1, 0] = -4.0
        canonical = canonical_adjacency(a)
        assert canonical[2, 0] == 2.0 and canonical[0, 2] == 0.0
        assert canonical[0, 1] == 4.0 and canonical[1, 0] == 0.0

    def test_keeps_digons(self):
        a = np.array([[0.0, -1.0], [2.0, 0.0]])
        assert np.array_equal(canonical_adjacency(a), a)


class TestNodeSplit:
    """Test the stratified node split."""

    def test_partition(self):
        g = generate_dsbm(DsbmConfig(nodes_per_cluster=20, clusters=3))
        split = split_nodes(g, (0.6, 0.2, 0.2), seed=0)
        every = np.concatenate([split.train, split.val, split.test])
        assert sorted(every.tolist()) == list(range(60))
        assert (len(split.train), len(split.val), len(split.test)) == (36, 12, 12)

    def test_stratified(self):
        g = generate_dsbm(DsbmConfig(nodes_per_cluster=20, clusters=3))
        split = split_nodes(g, seed=1)
        assert np.bincount(g.labels[split.train]).tolist() == [12, 12, 12]

    def test_deterministic(self):
        g = generate_dsbm(DsbmConfig(nodes_per_cluster=20, clusters=3))
        a, b = split_nodes(g, seed=3), split_nodes(g, seed=3)
        assert np.array_equal(a.test, b.test)

    def test_bad_fractions(self):
        g = generate_dsbm(DsbmConfig(nodes_per_cluster=20, clusters=3))
        with pytest.raises(InvalidConfigError):
            split_nodes(g, (0.5, 0.5, 0.5))

    def test_needs_labels(self, four_node):
        with pytest.raises(SplitError):
            split_nodes(four_node)


class TestFoldNodeSplit:
    """Test the cross-validation node split with disjoint test blocks."""

    @pytest.fixture
    def graph(self):
        return generate_dsbm(DsbmConfig(nodes_per_cluster=30, clusters=5))

    def test_test_blocks_are_disjoint(self, graph):
        tests = [fold_node_split(graph, (0.6, 0.2, 0.2), fold=k, seed=0).test for k in range(5)]
        every = np.concatenate(tests)
        assert every.size == graph.n
        assert np.unique(every).size == graph.n

    def test_every_node_tested_twice_in_ten_folds(self, graph):
        counts = np.zeros(graph.n, dtype=int)
        for k in range(10):
            counts[fold_node_split(graph, fold=k, seed=4).test] += 1
        assert np.all(counts == 2)

    def test_sizes_and_strata(self, graph):
        split = fold_node_split(graph, fold=3, seed=1)
        assert (len(split.train), len(split.val), len(split.test)) == (90, 30, 30)
        assert np.bincount(graph.labels[split.test]).tolist() == [6] * 5
        assert np.bincount(graph.labels[split.val]).tolist() == [6] * 5
        every = np.concatenate([split.train, split.val, split.test])
        assert sorted(every.tolist()) == list(range(graph.n))

    def test_cycle_reuses_block_with_new_validation(self, graph):
        first, again = fold_node_split(graph, fold=0, seed=2), fold_node_split(graph, fold=5, seed=2)
        assert np.array_equal(first.test, again.test)
        assert not np.array_equal(first.val, again.val)

    def test_large_test_share_falls_back(self, graph):
        split = fold_node_split(graph, (0.1, 0.1, 0.8), fold=2, seed=3)
        assert np.array_equal(split.test, split_nodes(graph, (0.1, 0.1, 0.8), seed=5).test)


class TestEdgeSplit:
    """Test the k-class edge prediction splits."""

    @pytest.fixture
    def unsigned(self):
        return generate_dsbm(DsbmConfig.preset("di150", nodes_per_cluster=30, seed=2))

    @pytest.fixture
    def signed(self):
        return generate_dsbm(DsbmConfig.preset("di150", nodes_per_cluster=30, signed=True, seed=2))

    def test_three_class_labels_match_topology(self, unsigned):
        split = split_edges(unsigned, "3CEP", seed=0)
        a = unsigned.adjacency
        for part in ("train", "val", "test"):
            for (u, v), label in zip(split.pairs[part], split.labels[part]):
                if label == 0:
                    assert a[u, v] != 0 and a[v, u] == 0
                elif label == 1:
                    assert a[v, u] != 0 and a[u, v] == 0
                else:
                    assert a[u, v] == 0 and a[v, u] == 0

    def test_removed_edges_leave_training_graph(self, unsigned):
        split = split_edges(unsigned, "3CEP", seed=0)
        assert np.array_equal(split.train_graph.adjacency + split.removed, unsigned.adjacency)
        for part in ("val", "test"):
            for u, v in split.pairs[part]:
                assert split.train_graph.adjacency[u, v] == 0
                assert split.train_graph.adjacency[v, u] == 0

    def test_every_class_in_every_part(self, unsigned):
        split = split_edges(unsigned, "3CEP", seed=0)
        for part in ("train", "val", "test"):
            assert set(split.labels[part].tolist()) == {0, 1, 2}

    def test_no_edge_class_matches_mean(self, unsigned):
        split = split_edges(unsigned, "3CEP", seed=0)
        counts = split.class_counts()
        assert counts[2] == round((counts[0] + counts[1]) / 2)

    def test_five_class_labels(self, signed):
        split = split_edges(signed, "5CEP", seed=0)
        a = signed.adjacency
        expected = {
            0: lambda u, v: a[u, v] > 0,
            1: lambda u, v: a[u, v] < 0,
            2: lambda u, v: a[v, u] > 0,
            3: lambda u, v: a[v, u] < 0,
            4: lambda u, v: a[u, v] == 0 and a[v, u] == 0,
        }
        for (u, v), label in zip(split.pairs["test"], split.labels["test"]):
            assert expected[int(label)](u, v)
        assert split.num_classes == 5

    def test_five_class_no_edge_count_matches_mean(self, signed):
        counts = split_edges(signed, "5CEP", seed=0).class_counts()
        assert abs(counts[4] - counts[:4].mean()) <= 1

    def test_four_class_has_no_non_edges(self, signed):
        split = split_edges(signed, "4CEP", seed=0)
        counts = split.class_counts()
        assert len(counts) == 4
        assert np.all(counts > 0)

    def test_signed_task_needs_signed_graph(self, unsigned):
        with pytest.raises(SplitError):
            split_edges(unsigned, "4CEP")

    def test_deterministic(self, unsigned):
        a, b = split_edges(unsigned, "3CEP", seed=5), split_edges(unsigned, "3CEP", seed=5)
        assert np.array_equal(a.pairs["test"], b.pairs["test"])

    def test_four_node_graph_is_too_small(self, four_node):
        with pytest.raises(SplitError):
            split_edges(four_node, "3CEP")

    def test_unknown_task(self, unsigned):
        with pytest.raises(InvalidConfigError):
            split_edges(unsigned, "NC")
