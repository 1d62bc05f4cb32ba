"""Weighted digraphs, edge-list ingestion, the DSBM generator and data splits."""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from sklearn.model_selection import StratifiedKFold, train_test_split

from ..utils.formats import PathLike, atomic_write_text
from ..utils.logger import get_logger
from ..utils.rng import substream
from .config import EDGE_TASKS, SIGNED_TASKS, DsbmConfig
from .errors import GraphFormatError, InvalidConfigError, ShapeError, SplitError
from .quaternion import QMatrix

logger = get_logger("graph")

TextSource = Union[str, Iterable[str]]

THREE_CLASS_NAMES = ("(u,v) in E", "(v,u) in E", "no edge")
FIVE_CLASS_NAMES = ("(u,v) in E+", "(u,v) in E-", "(v,u) in E+", "(v,u) in E-", "no edge")


@dataclass(frozen=True, eq=False)
class Digraph:
    """Weighted digraph on nodes ``0..n-1``; ``adjacency[u, v]`` is the weight of u->v."""

    adjacency: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        a = np.array(self.adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"adjacency must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ShapeError("a digraph needs at least one node")
        if not np.all(np.isfinite(a)):
            raise GraphFormatError("adjacency contains non-finite weights")
        if np.any(np.diag(a) != 0):
            raise GraphFormatError("self-loops are not allowed in stored graphs")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64)
            if labels.shape != (a.shape[0],):
                raise ShapeError(f"expected {a.shape[0]} labels, got shape {labels.shape}")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(self.adjacency))

    @property
    def is_signed(self) -> bool:
        return bool(np.any(self.adjacency < 0))

    @property
    def num_classes(self) -> int:
        return 0 if self.labels is None else int(self.labels.max()) + 1

    def edges(self) -> List[Tuple[int, int, float]]:
        """Edges as ``(u, v, weight)`` in row-major order."""
        us, vs = np.nonzero(self.adjacency)
        return [(int(u), int(v), float(self.adjacency[u, v])) for u, v in zip(us, vs)]


def transpose(g: Digraph) -> Digraph:
    return Digraph(g.adjacency.T, g.labels)


def with_adjacency(g: Digraph, adjacency: np.ndarray) -> Digraph:
    return Digraph(adjacency, g.labels)


def _lines(source: TextSource) -> Iterable[str]:
    return source.splitlines() if isinstance(source, str) else source


def parse_edge_list(source: TextSource) -> Digraph:
    """Parse ``u v w`` lines (tab or space separated, 0-based ids).

    An optional ``# n=<count>`` comment fixes the node count; otherwise it is
    one more than the largest id. Repeated ``(u, v)`` lines add up.
    """
    declared_n: Optional[int] = None
    entries: Dict[Tuple[int, int], float] = {}
    for line_number, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip().replace(" ", "")
            if body.startswith("n="):
                try:
                    declared_n = int(body[2:])
                except ValueError:
                    raise GraphFormatError(f"bad node-count header '{line}'", line_number)
                if declared_n < 1:
                    raise GraphFormatError("node count must be at least 1", line_number)
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphFormatError(f"expected 'u v w', got '{line}'", line_number)
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphFormatError(f"expected 'u v w', got '{line}'", line_number)
        if u < 0 or v < 0:
            raise GraphFormatError("node ids must be non-negative", line_number)
        if u == v:
            raise GraphFormatError(f"self-loop on node {u}", line_number)
        if not math.isfinite(w):
            raise GraphFormatError(f"non-finite weight '{parts[2]}'", line_number)
        if declared_n is not None and max(u, v) >= declared_n:
            raise GraphFormatError(f"node id {max(u, v)} out of range for n={declared_n}", line_number)
        entries[(u, v)] = entries.get((u, v), 0.0) + w

    n = declared_n if declared_n is not None else 1 + max((max(u, v) for u, v in entries), default=-1)
    if n < 1:
        raise GraphFormatError("edge list is empty and declares no node count")
    adjacency = np.zeros((n, n))
    for (u, v), w in entries.items():
        adjacency[u, v] = w
    return Digraph(adjacency)


def read_labels(source: TextSource, n: int) -> np.ndarray:
    """Parse ``node <TAB> class`` lines; every node must be labelled exactly once."""
    labels = np.full(n, -1, dtype=np.int64)
    for line_number, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"expected 'node class', got '{line}'", line_number)
        try:
            node, label = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"expected 'node class', got '{line}'", line_number)
        if not 0 <= node < n:
            raise GraphFormatError(f"node id {node} out of range for n={n}", line_number)
        if label < 0:
            raise GraphFormatError("class ids must be non-negative", line_number)
        if labels[node] != -1:
            raise GraphFormatError(f"node {node} labelled twice", line_number)
        labels[node] = label
    missing = np.flatnonzero(labels < 0)
    if missing.size:
        raise GraphFormatError(f"{missing.size} nodes have no label (first: {int(missing[0])})")
    return labels


def _format_weight(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def format_edge_list(g: Digraph) -> str:
    lines = [f"# n={g.n}"]
    lines.extend(f"{u}\t{v}\t{_format_weight(w)}" for u, v, w in g.edges())
    return "\n".join(lines) + "\n"


def format_labels(g: Digraph) -> str:
    if g.labels is None:
        raise InvalidConfigError("graph has no labels to write")
    return "".join(f"{u}\t{int(c)}\n" for u, c in enumerate(g.labels))


def write_edge_list(g: Digraph, path: PathLike) -> None:
    atomic_write_text(path, format_edge_list(g))


def write_labels(g: Digraph, path: PathLike) -> None:
    atomic_write_text(path, format_labels(g))


def _forward_probability(cfg: DsbmConfig, cu: np.ndarray, cv: np.ndarray) -> np.ndarray:
    # probability that pair (u, v), u < v, is oriented u -> v
    beta = cfg.direction_prob
    if cfg.meta_graph == "ordered":
        return np.where(cu == cv, 0.5, beta)
    forward = (cu + 1) % cfg.clusters == cv
    backward = (cv + 1) % cfg.clusters == cu
    return np.where(cu == cv, 0.5, np.where(forward, beta, np.where(backward, 1.0 - beta, 0.5)))


def generate_dsbm(cfg: DsbmConfig) -> Digraph:
    """Sample a directed stochastic block model graph.

    Each unordered pair ``{u, v}`` draws from its own substream (keyed by
    ``u``), so the graph is a pure function of the config.

    Under the default ``cyclic`` meta-graph with three or more clusters every
    cluster has the same expected in- and out-degree. ``ordered`` points inter-cluster pairs ``u < v`` from
    ``u`` to ``v`` with probability ``direction_prob``, so degrees depend on the
    cluster index.
    """
    n = cfg.n
    clusters = np.repeat(np.arange(cfg.clusters), cfg.nodes_per_cluster)
    adjacency = np.zeros((n, n))

    for u in range(n - 1):
        v = np.arange(u + 1, n)
        rng = substream(cfg.seed, "dsbm", u)
        draws = rng.random((5, v.size))
        weights = rng.integers(cfg.weight_low, cfg.weight_high, endpoint=True, size=(2, v.size)).astype(np.float64)
        if cfg.signed:
            weights *= np.where(draws[3:5] < 0.5, -1.0, 1.0)

        same = clusters[v] == clusters[u]
        exists = draws[0] < np.where(same, cfg.intra_prob, cfg.inter_prob)
        digon = exists & (draws[1] < cfg.digon_fraction)
        single = exists & ~digon
        forward = draws[2] < _forward_probability(cfg, np.full(v.size, clusters[u]), clusters[v])

        out = digon | (single & forward)
        back = single & ~forward
        adjacency[u, v[out]] = weights[0, out]
        adjacency[v[back], u] = weights[0, back]
        adjacency[v[digon], u] = weights[1, digon]

    g = Digraph(adjacency, clusters)
    logger.info(
        "dsbm_generated",
        n=n,
        edges=g.edge_count,
        digon_fraction=round(digon_fraction(g), 4),
        seed=cfg.seed,
        meta_graph=cfg.meta_graph,
    )
    return g


def digon_fraction(g: Digraph) -> float:
    """Fraction of connected unordered pairs that carry edges both ways."""
    t = g.adjacency != 0
    connected = np.count_nonzero(np.triu(t | t.T, k=1))
    if connected == 0:
        return 0.0
    return np.count_nonzero(np.triu(t & t.T, k=1)) / connected


def degree_features(g: Digraph, use_abs: bool = False) -> np.ndarray:
    """``n x 2`` matrix of (in-degree, out-degree), weighted."""
    a = np.abs(g.adjacency) if use_abs else g.adjacency
    return np.column_stack([a.sum(axis=0), a.sum(axis=1)])


def canonical_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """Reorient single negative edges ``u -> v (w < 0)`` as ``v -> u (-w)``.

    Both orientations give the same quaternionic Hermitian matrix; digons are
    left untouched.
    """
    a = np.array(adjacency, dtype=np.float64)
    flip = (a < 0) & (a.T == 0)
    a[flip.T] = (-a.T)[flip.T]
    a[flip] = 0.0
    return a


def reconstruct_adjacency(hq: QMatrix) -> np.ndarray:
    """Invert the element mapping of the quaternionic Hermitian matrix.

    Real entries are symmetric digons, ``i`` entries single edges and
    ``j``/``k`` entries asymmetric digons. The result is in the form returned
    by :func:`canonical_adjacency`. Diagonal entries are ignored.
    """
    n = hq.rows
    r, i1, i2, i3 = hq.components
    a = np.zeros((n, n))
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)

    symmetric = upper & (r != 0)
    a[symmetric] = r[symmetric]
    a[symmetric.T] = r.T[symmetric.T]

    single = upper & (i1 != 0)
    forward = single & (i1 > 0)
    backward = single & (i1 < 0)
    a[forward] = 2.0 * i1[forward]
    a[backward.T] = (-2.0 * i1.T)[backward.T]

    digon = upper & ((i2 != 0) | (i3 != 0))
    a[digon] = 2.0 * i2[digon]
    a[digon.T] = (-2.0 * i3.T)[digon.T]
    return a


@dataclass(frozen=True, eq=False)
class NodeSplit:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def part(self, name: str) -> np.ndarray:
        return {"train": self.train, "val": self.val, "test": self.test}[name]


def _check_fractions(fractions: Sequence[float]) -> Tuple[float, float, float]:
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidConfigError(f"split fractions must be three non-negative values summing to 1, got {fractions}")
    return float(fractions[0]), float(fractions[1]), float(fractions[2])


def _sklearn_seed(seed: int, name: str, *indices: int) -> int:
    return int(substream(seed, name, *indices).integers(0, 2**31 - 1))


def _check_stratifiable(g: Digraph) -> None:
    if g.labels is None:
        raise SplitError("node split needs labels")
    classes, counts = np.unique(g.labels, return_counts=True)
    if counts.min() < 3:
        small = int(classes[np.argmin(counts)])
        raise SplitError(f"class {small} has {int(counts.min())} members; stratification needs at least 3")


def split_nodes(g: Digraph, fractions: Sequence[float] = (0.6, 0.2, 0.2), seed: int = 0) -> NodeSplit:
    """Stratified train/val/test node split."""
    f_train, f_val, f_test = _check_fractions(fractions)
    _check_stratifiable(g)

    nodes = np.arange(g.n)
    n_train = int(round(f_train * g.n))
    n_val = int(round(f_val * g.n))
    try:
        train, rest = train_test_split(
            nodes, train_size=n_train, stratify=g.labels, random_state=_sklearn_seed(seed, "split-nodes", 0)
        )
        if f_test == 0:
            val, test = rest, rest[:0]
        elif n_val == 0:
            val, test = rest[:0], rest
        else:
            val, test = train_test_split(
                rest, train_size=n_val, stratify=g.labels[rest], random_state=_sklearn_seed(seed, "split-nodes", 1)
            )
    except ValueError as exc:
        raise SplitError(f"cannot stratify {g.n} nodes into {fractions}: {exc}") from exc
    return NodeSplit(np.sort(train), np.sort(val), np.sort(test))


def fold_node_split(
    g: Digraph, fractions: Sequence[float] = (0.6, 0.2, 0.2), fold: int = 0, seed: int = 0
) -> NodeSplit:
    """Node split for cross-validation fold ``fold``.

    The nodes are cut once, seeded by ``seed`` alone, into ``round(1 / f_test)``
    stratified test blocks; fold ``k`` tests on block ``k mod blocks`` and draws a
    stratified validation set from the other blocks with seed ``seed + fold``.
    Test blocks of consecutive folds are therefore disjoint and every node is
    tested once per cycle of ``blocks`` folds. Fractions whose test share is
    zero or above two thirds fall back to :func:`split_nodes`.
    """
    _, f_val, f_test = _check_fractions(fractions)
    blocks = int(round(1.0 / f_test)) if f_test > 0 else 0
    if blocks < 2:
        return split_nodes(g, fractions, seed + fold)
    _check_stratifiable(g)

    nodes = np.arange(g.n)
    n_val = int(round(f_val * g.n))
    try:
        folds = StratifiedKFold(n_splits=blocks, shuffle=True, random_state=_sklearn_seed(seed, "test-blocks", 0))
        rest, test = list(folds.split(nodes, g.labels))[fold % blocks]
        if n_val == 0:
            train, val = rest, rest[:0]
        else:
            train, val = train_test_split(
                rest, test_size=n_val, stratify=g.labels[rest], random_state=_sklearn_seed(seed + fold, "split-nodes", 1)
            )
    except ValueError as exc:
        raise SplitError(f"cannot cut {g.n} nodes into {blocks} stratified test blocks: {exc}") from exc
    logger.debug("fold_split", fold=fold, block=fold % blocks, blocks=blocks, test=len(test))
    return NodeSplit(np.sort(train), np.sort(val), np.sort(test))


@dataclass(frozen=True, eq=False)
class EdgeSplit:
    """Labelled ordered pairs per part plus the graph the model may see."""

    task: str
    train_graph: Digraph
    removed: np.ndarray
    pairs: Dict[str, np.ndarray] = field(default_factory=dict)
    labels: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return 3 if self.task == "3CEP" else 4 if self.task == "4CEP" else 5

    def class_counts(self) -> np.ndarray:
        every = np.concatenate([self.labels[p] for p in ("train", "val", "test")])
        return np.bincount(every, minlength=self.num_classes)


def _spanning_pairs(t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Boolean upper-triangular mask of a random spanning forest of the undirected pattern."""
    pattern = np.triu(t | t.T, k=1)
    weights = np.where(pattern, 1.0 + rng.random(pattern.shape), 0.0)
    tree = minimum_spanning_tree(csr_matrix(weights)).toarray() != 0
    tree = tree | tree.T
    return np.triu(tree, k=1)


def split_edges(g: Digraph, task: str, fractions: Sequence[float] = (0.8, 0.05, 0.15), seed: int = 0) -> EdgeSplit:
    """Build a k-class edge prediction problem.

    ``fractions`` are (train, val, test). Every single (non-digon) edge gives
    one sample, presented in its stored or reversed orientation with equal
    probability. Val/test edges are removed from the training graph, except
    that edges of a random spanning forest always stay in training so the
    weakly connected components are preserved.
    """
    if task not in EDGE_TASKS:
        raise InvalidConfigError(f"unknown edge task '{task}'")
    f_train, f_val, f_test = _check_fractions(fractions)
    if task in SIGNED_TASKS and not g.is_signed:
        raise SplitError(f"{task} needs negative edge weights, the graph has none")

    rng = substream(seed, "split-edges", 0)
    a = g.adjacency
    t = a != 0
    single = t & ~t.T
    us, vs = np.nonzero(single)
    weights = a[us, vs]
    flip = rng.random(us.size) < 0.5

    pair_u = np.where(flip, vs, us)
    pair_v = np.where(flip, us, vs)
    if task == "3CEP":
        labels = np.where(flip, 1, 0)
    else:
        labels = np.where(weights > 0, 0, 1) + np.where(flip, 2, 0)
    protected_mask = _spanning_pairs(t, rng)
    protected = protected_mask[np.minimum(us, vs), np.maximum(us, vs)]

    edge_classes = 2 if task == "3CEP" else 4
    if task in ("3CEP", "5CEP"):
        mean_size = len(labels) / edge_classes
        count = int(round(mean_size))
        none_u, none_v = np.nonzero(np.triu(~(t | t.T), k=1))
        if count > none_u.size:
            raise SplitError(f"only {none_u.size} non-adjacent pairs available, {count} needed")
        chosen = rng.choice(none_u.size, size=count, replace=False) if count else np.zeros(0, dtype=np.int64)
        orient = rng.random(count) < 0.5
        nu, nv = none_u[chosen], none_v[chosen]
        pair_u = np.concatenate([pair_u, np.where(orient, nv, nu)])
        pair_v = np.concatenate([pair_v, np.where(orient, nu, nv)])
        labels = np.concatenate([labels, np.full(count, edge_classes)])
        protected = np.concatenate([protected, np.zeros(count, dtype=bool)])

    num_classes = edge_classes + (1 if task in ("3CEP", "5CEP") else 0)
    parts: Dict[str, List[int]] = {"train": [], "val": [], "test": []}
    for c in range(num_classes):
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.size)]
        if members.size == 0:
            raise SplitError(f"{task}: class {c} has no samples")
        k_val = max(1, int(round(f_val * members.size))) if f_val > 0 else 0
        k_test = max(1, int(round(f_test * members.size))) if f_test > 0 else 0
        free = members[~protected[members]]
        if k_val + k_test > free.size or k_val + k_test >= members.size:
            raise SplitError(
                f"{task}: class {c} has {members.size} samples ({free.size} removable), "
                f"too few to split while preserving connectivity"
            )
        held = free[: k_val + k_test]
        parts["val"].extend(held[:k_val])
        parts["test"].extend(held[k_val:])
        parts["train"].extend(np.setdiff1d(members, held))

    removed = np.zeros_like(a)
    for index in parts["val"] + parts["test"]:
        u, v = pair_u[index], pair_v[index]
        removed[u, v], removed[v, u] = a[u, v], a[v, u]
    train_graph = with_adjacency(g, a - removed)

    skipped = int(np.count_nonzero(protected))
    logger.debug("edge_split", task=task, samples=int(labels.size), protected=skipped)
    ordered = {name: np.sort(np.asarray(idx, dtype=np.int64)) for name, idx in parts.items()}
    return EdgeSplit(
        task=task,
        train_graph=train_graph,
        removed=removed,
        pairs={name: np.column_stack([pair_u[idx], pair_v[idx]]).astype(np.int64) for name, idx in ordered.items()},
        labels={name: labels[idx].astype(np.int64) for name, idx in ordered.items()},
    )
