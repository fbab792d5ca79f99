"""Binary axis-aligned classification trees.

One node type serves both techniques: internal nodes carry a split rule,
terminal nodes carry per-class training counts. Routing convention is
``x[feature] <= threshold`` goes left. Split quality is Shannon information
gain in bits; terminal-node class probabilities use Laplace (+1) smoothing so
no class ever gets exactly zero probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

__all__ = [
    "DecisionTree",
    "SplitRule",
    "TreeNode",
    "enumerate_splits",
    "grow_randomized",
    "information_gain",
    "leaf_posterior",
    "leaf_posterior_matrix",
    "parse_tree",
    "predict",
    "serialize_tree",
    "top_k_splits",
    "tree_size",
    "tree_total_nodes",
]


@dataclass(frozen=True)
class SplitRule:
    """Axis-aligned question: is x[feature] <= threshold?"""

    feature: int
    threshold: float


class TreeNode:
    """Node of a binary tree; a leaf iff both children are None.

    ``counts`` holds the per-class training counts of the points reaching the
    node; ``indices`` optionally caches which training rows those are (used by
    the samplers, not needed for prediction).
    """

    __slots__ = ("feature", "threshold", "left", "right", "counts", "indices")

    def __init__(self, counts, feature=None, threshold=None, left=None, right=None, indices=None):
        self.counts = np.asarray(counts, dtype=np.int64)
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.indices = indices

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def copy(self) -> TreeNode:
        """Structural copy; count/index arrays are shared (treated immutable)."""
        if self.is_leaf:
            return TreeNode(self.counts, indices=self.indices)
        return TreeNode(
            self.counts,
            feature=self.feature,
            threshold=self.threshold,
            left=self.left.copy(),
            right=self.right.copy(),
            indices=self.indices,
        )


@dataclass(frozen=True)
class DecisionTree:
    """Immutable binary classification tree."""

    root: TreeNode
    num_classes: int
    min_leaf: int = 1

    def leaves(self) -> list[TreeNode]:
        return [node for node in iter_nodes(self.root) if node.is_leaf]

    def internal_nodes(self) -> list[TreeNode]:
        return [node for node in iter_nodes(self.root) if not node.is_leaf]


def iter_nodes(root: TreeNode):
    """Preorder traversal."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)


def tree_size(tree: DecisionTree) -> int:
    """Number of terminal nodes."""
    return sum(1 for node in iter_nodes(tree.root) if node.is_leaf)


def tree_total_nodes(tree: DecisionTree) -> int:
    """Number of nodes of either kind (always 2 * leaves - 1)."""
    return sum(1 for _ in iter_nodes(tree.root))


def _entropy_bits(counts: np.ndarray) -> np.ndarray:
    """Shannon entropy in bits of each row of a count matrix."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / totals
        terms = np.where(counts > 0, p * np.log2(np.where(counts > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def _gain_bits(parent: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Entropy reduction of splitting parent rows into left/right rows."""
    n = parent.sum(axis=-1)
    n_left = left.sum(axis=-1)
    n_right = right.sum(axis=-1)
    return _entropy_bits(parent) - (n_left * _entropy_bits(left) + n_right * _entropy_bits(right)) / n


def information_gain(parent_counts, left_counts, right_counts) -> float:
    """Information gain in bits of a split of parent_counts into the children.

    Raises:
        ValueError: if the child counts do not sum to the parent counts or the
            parent has fewer than 2 points.
    """
    parent = np.asarray(parent_counts, dtype=np.int64)
    left = np.asarray(left_counts, dtype=np.int64)
    right = np.asarray(right_counts, dtype=np.int64)
    if not np.array_equal(left + right, parent):
        raise ValueError("left and right counts must sum to the parent counts")
    if parent.sum() < 2:
        raise ValueError("parent must contain at least 2 points")
    return float(_gain_bits(parent[None, :], left[None, :], right[None, :])[0])


def enumerate_splits(data: Dataset, min_leaf: int) -> list[tuple[SplitRule, float]]:
    """All candidate splits of a node's data with their information gains.

    One candidate per (feature, midpoint between consecutive distinct sorted
    values); candidates leaving fewer than min_leaf points in either child are
    dropped. Candidates are ordered by feature index, then threshold.
    """
    n = data.n
    if n < 2:
        return []
    num_classes = data.num_classes
    onehot = np.zeros((n, num_classes), dtype=np.int64)
    onehot[np.arange(n), data.labels] = 1
    parent = onehot.sum(axis=0)

    candidates: list[tuple[SplitRule, float]] = []
    for j in range(data.m):
        values = data.features[:, j]
        order = np.argsort(values, kind="stable")
        sorted_values = values[order]
        cuts = np.flatnonzero(sorted_values[:-1] != sorted_values[1:])
        if cuts.size == 0:
            continue
        left_sizes = cuts + 1
        valid = (left_sizes >= min_leaf) & (n - left_sizes >= min_leaf)
        cuts = cuts[valid]
        if cuts.size == 0:
            continue
        cum = np.cumsum(onehot[order], axis=0)
        left = cum[cuts]
        right = parent[None, :] - left
        gains = _gain_bits(np.broadcast_to(parent, left.shape), left, right)
        thresholds = (sorted_values[cuts] + sorted_values[cuts + 1]) / 2.0
        candidates.extend(
            (SplitRule(j, float(t)), float(g)) for t, g in zip(thresholds, gains)
        )
    return candidates


def top_k_splits(
    candidates: list[tuple[SplitRule, float]], k: int
) -> list[tuple[SplitRule, float]]:
    """The k highest-gain candidates; ties go to lower feature, then threshold."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    ranked = sorted(candidates, key=lambda c: (-c[1], c[0].feature, c[0].threshold))
    return ranked[:k]


def leaf_posterior(counts) -> np.ndarray:
    """Laplace-smoothed class probabilities (n_c + 1) / (n + C)."""
    counts = np.asarray(counts, dtype=np.float64)
    return (counts + 1.0) / (counts.sum() + counts.shape[-1])


def _route(node: TreeNode, x: np.ndarray) -> TreeNode:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def predict(tree: DecisionTree, x) -> np.ndarray:
    """Class posterior at x: the reached leaf's smoothed count distribution."""
    leaf = _route(tree.root, np.asarray(x, dtype=np.float64))
    return leaf_posterior(leaf.counts)


def leaf_posterior_matrix(tree: DecisionTree, features: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    """Smoothed leaf posteriors for every row of a feature matrix, (n, C).

    ``alpha`` is the symmetric Dirichlet smoothing count; alpha=1 matches
    ``leaf_posterior``.
    """
    features = np.asarray(features, dtype=np.float64)
    out = np.empty((features.shape[0], tree.num_classes))

    def fill(node: TreeNode, rows: np.ndarray) -> None:
        if rows.size == 0:
            return
        if node.is_leaf:
            counts = node.counts.astype(np.float64)
            out[rows] = (counts + alpha) / (counts.sum() + alpha * tree.num_classes)
            return
        goes_left = features[rows, node.feature] <= node.threshold
        fill(node.left, rows[goes_left])
        fill(node.right, rows[~goes_left])

    fill(tree.root, np.arange(features.shape[0]))
    return out


def grow_randomized(data: Dataset, min_leaf: int, top_k: int = 20, seed=None) -> DecisionTree:
    """Grow a tree choosing each split uniformly among the top-k candidates.

    Recursion stops at pure nodes, nodes with fewer than 2*min_leaf points,
    or nodes with no valid candidate. Deterministic given seed; with top_k=1
    this is greedy CART.
    """
    if data.n < 1:
        raise ValueError("cannot grow a tree on an empty dataset")
    if min_leaf < 1:
        raise ValueError(f"need min_leaf >= 1, got {min_leaf}")
    rng = np.random.default_rng(seed)

    def build(indices: np.ndarray) -> TreeNode:
        node_data = data.subset(indices)
        counts = node_data.class_counts()
        if np.count_nonzero(counts) <= 1 or node_data.n < 2 * min_leaf:
            return TreeNode(counts, indices=indices)
        candidates = enumerate_splits(node_data, min_leaf)
        if not candidates:
            return TreeNode(counts, indices=indices)
        best = top_k_splits(candidates, top_k)
        rule, _ = best[rng.integers(len(best))]
        goes_left = node_data.features[:, rule.feature] <= rule.threshold
        return TreeNode(
            counts,
            feature=rule.feature,
            threshold=rule.threshold,
            left=build(indices[goes_left]),
            right=build(indices[~goes_left]),
            indices=indices,
        )

    root = build(np.arange(data.n))
    return DecisionTree(root=root, num_classes=data.num_classes, min_leaf=min_leaf)


def serialize_tree(tree: DecisionTree) -> str:
    """Line-oriented text form: one preorder line per node.

    Internal nodes: ``<id> split <feature> <threshold>``; terminal nodes:
    ``<id> leaf <count> <count> ...``. The preorder of a full binary tree
    reconstructs the shape without child pointers.
    """
    lines: list[str] = []

    def walk(node: TreeNode) -> None:
        node_id = len(lines)
        if node.is_leaf:
            counts = " ".join(str(int(c)) for c in node.counts)
            lines.append(f"{node_id} leaf {counts}")
        else:
            lines.append(f"{node_id} split {node.feature} {node.threshold!r}")
            walk(node.left)
            walk(node.right)

    walk(tree.root)
    return "\n".join(lines) + "\n"


def parse_tree(text: str, num_classes: int, min_leaf: int = 1) -> DecisionTree:
    """Inverse of serialize_tree."""
    lines = [line.split() for line in text.strip().splitlines()]
    pos = 0

    def build() -> TreeNode:
        nonlocal pos
        if pos >= len(lines):
            raise ValueError("truncated tree text")
        parts = lines[pos]
        pos += 1
        kind = parts[1]
        if kind == "leaf":
            counts = np.array([int(c) for c in parts[2:]], dtype=np.int64)
            if counts.shape != (num_classes,):
                raise ValueError(f"leaf line has {counts.size} counts, expected {num_classes}")
            return TreeNode(counts)
        if kind != "split":
            raise ValueError(f"unknown node kind {kind!r}")
        feature = int(parts[2])
        threshold = float(parts[3])
        left = build()
        right = build()
        return TreeNode(
            left.counts + right.counts, feature=feature, threshold=threshold, left=left, right=right
        )

    root = build()
    if pos != len(lines):
        raise ValueError("trailing lines after tree")
    return DecisionTree(root=root, num_classes=num_classes, min_leaf=min_leaf)
