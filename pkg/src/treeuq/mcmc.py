"""Reversible-jump MCMC over binary classification trees, with restarts.

The sampler targets posterior(tree) = marginal_likelihood(tree) * prior(tree)
where the class probabilities in each terminal node have been integrated out
against a symmetric Dirichlet(alpha), so jumps only change tree structure.

Prior over trees (support: no empty leaf, every rule drawn from the node's
own split menu, leaf count K <= K_max):

    p(tree) = 1/K_max                    (uniform over leaf counts)
            * 1/catalan(K - 1)           (uniform over tree shapes given K)
            * prod_internal 1/(m * V)    (uniform rule per node)

where V is the size of the node's split menu: the distinct observed values of
the chosen feature at that node, excluding the maximum (thresholds equal to
the maximum would route everything left). With continuous features the rule
factors sum to one within every shape, so the leaf-count marginal of the
prior is exactly uniform on 1..K_max - the property the prior-sampling check
relies on.

Moves: birth (split a uniform leaf), death (collapse a uniform prunable
node), change_variable (redraw feature and threshold at a uniform internal
node), change_rule (redraw threshold only). The returned log proposal ratio
makes birth/death a reversible pair: it combines the leaf-vs-prunable-node
counts with the split-choice probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .data import Dataset
from .tree import DecisionTree, TreeNode, iter_nodes, leaf_posterior_matrix, tree_size

__all__ = [
    "ChainSample",
    "McmcConfig",
    "PosteriorEnsemble",
    "Proposal",
    "bayes_predictive",
    "bayes_predictive_matrix",
    "dirichlet_multinomial_log_marginal",
    "ensemble_mean_size",
    "log_marginal_likelihood",
    "log_prior",
    "mh_step",
    "propose_move",
    "refresh_counts",
    "run_chain",
    "run_with_restarts",
    "sample_prior_tree",
]

MOVE_KINDS = ("birth", "death", "change_variable", "change_rule")


@dataclass(frozen=True)
class McmcConfig:
    """Sampler settings.

    The defaults reproduce the benchmark protocol: 50 restarts of 2000
    burn-in plus 2000 retained steps with move probabilities
    (birth, death, change_variable, change_rule) = (0.1, 0.1, 0.1, 0.7).
    """

    restarts: int = 50
    burn_in: int = 2000
    post_burn_in: int = 2000
    move_probs: tuple[float, float, float, float] = (0.1, 0.1, 0.1, 0.7)
    max_leaves: int = 50
    thinning: int = 1
    dirichlet_alpha: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if abs(sum(self.move_probs) - 1.0) > 1e-9:
            raise ValueError(f"move probabilities must sum to 1, got {self.move_probs}")
        if min(self.move_probs) < 0:
            raise ValueError("move probabilities must be non-negative")
        if self.restarts < 1 or self.burn_in < 1 or self.post_burn_in < 1:
            raise ValueError("restarts, burn_in and post_burn_in must all be >= 1")
        if self.max_leaves < 1:
            raise ValueError(f"need max_leaves >= 1, got {self.max_leaves}")
        if self.thinning < 1:
            raise ValueError(f"need thinning >= 1, got {self.thinning}")
        if self.dirichlet_alpha <= 0:
            raise ValueError(f"need dirichlet_alpha > 0, got {self.dirichlet_alpha}")


@dataclass(frozen=True)
class ChainSample:
    """One retained posterior tree sample."""

    tree: DecisionTree
    restart_index: int
    step_index: int


@dataclass(frozen=True)
class PosteriorEnsemble:
    """Pooled post-burn-in samples from all restarts, in restart order."""

    samples: tuple[ChainSample, ...]

    @property
    def n(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class Proposal:
    """A proposed transition; infeasible proposals count as rejected steps."""

    kind: str
    tree: DecisionTree | None
    log_ratio: float
    feasible: bool


def dirichlet_multinomial_log_marginal(counts, alpha: float) -> float:
    """Log marginal likelihood of class-count rows under Dirichlet(alpha) rates.

    Each row contributes log[Gamma(C*a)/Gamma(n+C*a) * prod_c Gamma(n_c+a)/Gamma(a)];
    an all-zero row contributes 0.
    """
    counts = np.atleast_2d(np.asarray(counts, dtype=np.float64))
    num_classes = counts.shape[1]
    totals = counts.sum(axis=1)
    per_leaf = (
        gammaln(num_classes * alpha)
        - gammaln(totals + num_classes * alpha)
        + (gammaln(counts + alpha) - gammaln(alpha)).sum(axis=1)
    )
    return float(per_leaf.sum())


def refresh_counts(tree: DecisionTree, data: Dataset) -> DecisionTree:
    """Re-route the training data through the tree, rebuilding counts/indices."""
    root = _reroute(tree.root, data, np.arange(data.n))
    return DecisionTree(root=root, num_classes=data.num_classes, min_leaf=tree.min_leaf)


def _reroute(node: TreeNode, data: Dataset, indices: np.ndarray) -> TreeNode:
    counts = np.bincount(data.labels[indices], minlength=data.num_classes)
    if node.is_leaf:
        return TreeNode(counts, indices=indices)
    goes_left = data.features[indices, node.feature] <= node.threshold
    return TreeNode(
        counts,
        feature=node.feature,
        threshold=node.threshold,
        left=_reroute(node.left, data, indices[goes_left]),
        right=_reroute(node.right, data, indices[~goes_left]),
        indices=indices,
    )


def _ensure_cached(tree: DecisionTree, data: Dataset) -> DecisionTree:
    return tree if tree.root.indices is not None else refresh_counts(tree, data)


def _split_menu(data: Dataset, indices: np.ndarray, feature: int) -> np.ndarray:
    """Thresholds at a node: distinct observed values excluding the maximum."""
    values = np.unique(data.features[indices, feature])
    return values[:-1]


def _log_catalan(j: int) -> float:
    """log of the j-th Catalan number (number of shapes with j+1 leaves)."""
    return math.lgamma(2 * j + 1) - 2.0 * math.lgamma(j + 1) - math.log(j + 1)


def log_marginal_likelihood(tree: DecisionTree, data: Dataset, alpha: float = 1.0) -> float:
    """Dirichlet-multinomial log marginal likelihood of the tree's partition."""
    cached = _ensure_cached(tree, data)
    counts = np.array([leaf.counts for leaf in cached.leaves()])
    return dirichlet_multinomial_log_marginal(counts, alpha)


def log_prior(tree: DecisionTree, k_max: int, data: Dataset) -> float:
    """Log prior of the tree; -inf outside the support.

    Support requires: leaf count <= k_max, no empty leaf, and every internal
    node's threshold taken from its own split menu.
    """
    return _log_prior_cached(_ensure_cached(tree, data), k_max, data)


def _log_prior_cached(tree: DecisionTree, k_max: int, data: Dataset) -> float:
    num_leaves = 0
    log_rules = 0.0
    for node in iter_nodes(tree.root):
        if node.is_leaf:
            num_leaves += 1
            if node.indices.size == 0:
                return -math.inf
            continue
        values = np.unique(data.features[node.indices, node.feature])
        menu_size = values.size - 1
        if menu_size < 1:
            return -math.inf
        pos = int(np.searchsorted(values, node.threshold))
        if pos >= menu_size or values[pos] != node.threshold:
            return -math.inf
        log_rules -= math.log(data.m * menu_size)
    if num_leaves > k_max:
        return -math.inf
    return -math.log(k_max) - _log_catalan(num_leaves - 1) + log_rules


def _copy_replace(node: TreeNode, target: TreeNode, replacement: TreeNode) -> TreeNode | None:
    """Copy of the path from node down to target with target swapped out.

    Untouched subtrees are shared by reference; returns None if target does
    not occur below node.
    """
    if node is target:
        return replacement
    if node.is_leaf:
        return None
    new_left = _copy_replace(node.left, target, replacement)
    if new_left is not None:
        return TreeNode(
            node.counts, node.feature, node.threshold, new_left, node.right, node.indices
        )
    new_right = _copy_replace(node.right, target, replacement)
    if new_right is not None:
        return TreeNode(
            node.counts, node.feature, node.threshold, node.left, new_right, node.indices
        )
    return None


def _rebuild_subtree(node: TreeNode, data: Dataset, indices: np.ndarray) -> TreeNode:
    """Same structure and rules as node, data re-routed from indices down."""
    counts = np.bincount(data.labels[indices], minlength=data.num_classes)
    if node.is_leaf:
        return TreeNode(counts, indices=indices)
    goes_left = data.features[indices, node.feature] <= node.threshold
    return TreeNode(
        counts,
        feature=node.feature,
        threshold=node.threshold,
        left=_rebuild_subtree(node.left, data, indices[goes_left]),
        right=_rebuild_subtree(node.right, data, indices[~goes_left]),
        indices=indices,
    )


def _prunable_nodes(root: TreeNode) -> list[TreeNode]:
    return [
        node
        for node in iter_nodes(root)
        if not node.is_leaf and node.left.is_leaf and node.right.is_leaf
    ]


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def propose_move(tree: DecisionTree, data: Dataset, move_probs, seed) -> Proposal:
    """Draw a move kind from move_probs and propose the corresponding jump.

    The log_ratio field is log q(proposed -> current) - log q(current ->
    proposed); for births and deaths it combines the leaf/prunable-node
    counts with the split-choice probability so the pair is reversible.
    Structurally impossible moves return feasible=False (the caller treats
    them as rejected steps).
    """
    tree = _ensure_cached(tree, data)
    rng = np.random.default_rng(seed)
    p_birth, p_death, p_change_var, p_change_rule = move_probs
    r = rng.random()
    if r < p_birth:
        kind = "birth"
    elif r < p_birth + p_death:
        kind = "death"
    elif r < p_birth + p_death + p_change_var:
        kind = "change_variable"
    else:
        kind = "change_rule"

    root = tree.root
    num_features = data.m

    if kind == "birth":
        leaves = [node for node in iter_nodes(root) if node.is_leaf]
        leaf = leaves[rng.integers(len(leaves))]
        feature = int(rng.integers(num_features))
        menu = _split_menu(data, leaf.indices, feature)
        if menu.size == 0:
            return Proposal(kind, None, -math.inf, False)
        threshold = float(menu[rng.integers(menu.size)])
        goes_left = data.features[leaf.indices, feature] <= threshold
        left_idx, right_idx = leaf.indices[goes_left], leaf.indices[~goes_left]
        grown = TreeNode(
            leaf.counts,
            feature=feature,
            threshold=threshold,
            left=TreeNode(np.bincount(data.labels[left_idx], minlength=data.num_classes), indices=left_idx),
            right=TreeNode(np.bincount(data.labels[right_idx], minlength=data.num_classes), indices=right_idx),
            indices=leaf.indices,
        )
        new_root = _copy_replace(root, leaf, grown)
        prunable_after = len(_prunable_nodes(new_root))
        log_ratio = (
            _log(p_death)
            - _log(p_birth)
            + math.log(len(leaves) * num_features * menu.size)
            - math.log(prunable_after)
        )
        proposed = DecisionTree(new_root, tree.num_classes, tree.min_leaf)
        return Proposal(kind, proposed, log_ratio, True)

    if kind == "death":
        prunable = _prunable_nodes(root)
        if not prunable:
            return Proposal(kind, None, -math.inf, False)
        node = prunable[rng.integers(len(prunable))]
        menu = _split_menu(data, node.indices, node.feature)
        if menu.size == 0:
            return Proposal(kind, None, -math.inf, False)
        collapsed = TreeNode(node.counts, indices=node.indices)
        new_root = _copy_replace(root, node, collapsed)
        leaves_after = sum(1 for n in iter_nodes(new_root) if n.is_leaf)
        log_ratio = (
            _log(p_birth)
            - _log(p_death)
            + math.log(len(prunable))
            - math.log(leaves_after * num_features * menu.size)
        )
        proposed = DecisionTree(new_root, tree.num_classes, tree.min_leaf)
        return Proposal(kind, proposed, log_ratio, True)

    internals = [node for node in iter_nodes(root) if not node.is_leaf]
    if not internals:
        return Proposal(kind, None, -math.inf, False)
    node = internals[rng.integers(len(internals))]

    if kind == "change_variable":
        new_feature = int(rng.integers(num_features))
        new_menu = _split_menu(data, node.indices, new_feature)
        if new_menu.size == 0:
            return Proposal(kind, None, -math.inf, False)
        old_menu = _split_menu(data, node.indices, node.feature)
        if old_menu.size == 0:
            return Proposal(kind, None, -math.inf, False)
        new_threshold = float(new_menu[rng.integers(new_menu.size)])
        log_ratio = math.log(new_menu.size) - math.log(old_menu.size)
    else:  # change_rule
        new_feature = node.feature
        menu = _split_menu(data, node.indices, new_feature)
        if menu.size == 0:
            return Proposal(kind, None, -math.inf, False)
        new_threshold = float(menu[rng.integers(menu.size)])
        log_ratio = 0.0

    template = TreeNode(
        node.counts, feature=new_feature, threshold=new_threshold,
        left=node.left, right=node.right, indices=node.indices,
    )
    rebuilt = _rebuild_subtree(template, data, node.indices)
    new_root = _copy_replace(root, node, rebuilt)
    proposed = DecisionTree(new_root, tree.num_classes, tree.min_leaf)
    return Proposal(kind, proposed, log_ratio, True)


def _transition(tree, log_lik, log_pri, data, config, rng, loglik_fn):
    """One MH step from a state with cached log likelihood/prior."""
    proposal = propose_move(tree, data, config.move_probs, rng)
    if not proposal.feasible:
        return tree, log_lik, log_pri, False
    u = rng.random()
    new_pri = _log_prior_cached(proposal.tree, config.max_leaves, data)
    if new_pri == -math.inf:
        return tree, log_lik, log_pri, False
    new_lik = loglik_fn(proposal.tree, data, config.dirichlet_alpha)
    log_accept = (new_lik - log_lik) + (new_pri - log_pri) + proposal.log_ratio
    if _log(u) < log_accept:
        return proposal.tree, new_lik, new_pri, True
    return tree, log_lik, log_pri, False


def mh_step(current: ChainSample, data: Dataset, config: McmcConfig, seed) -> ChainSample:
    """One Metropolis-Hastings step; returns the next chain state.

    Accepts the proposal with probability min(1, exp(delta log marginal
    likelihood + delta log prior + log proposal ratio)).
    """
    rng = np.random.default_rng(seed)
    tree = _ensure_cached(current.tree, data)
    log_lik = log_marginal_likelihood(tree, data, config.dirichlet_alpha)
    log_pri = _log_prior_cached(tree, config.max_leaves, data)
    tree, _, _, _ = _transition(tree, log_lik, log_pri, data, config, rng, log_marginal_likelihood)
    return ChainSample(tree=tree, restart_index=current.restart_index, step_index=current.step_index + 1)


def sample_prior_tree(data: Dataset, k_max: int, seed) -> DecisionTree:
    """Random initial tree: grow from a single leaf to a uniform leaf count.

    Each growth step splits a uniform leaf on a uniform feature and a uniform
    menu threshold; growth stops early if no leaf can be split.
    """
    rng = np.random.default_rng(seed)
    target_leaves = int(rng.integers(1, k_max + 1))
    root = TreeNode(data.class_counts(), indices=np.arange(data.n))
    tree = DecisionTree(root, data.num_classes)
    attempts = 0
    while tree_size(tree) < target_leaves and attempts < 20 * k_max:
        attempts += 1
        leaves = [node for node in iter_nodes(tree.root) if node.is_leaf]
        leaf = leaves[rng.integers(len(leaves))]
        feature = int(rng.integers(data.m))
        menu = _split_menu(data, leaf.indices, feature)
        if menu.size == 0:
            continue
        threshold = float(menu[rng.integers(menu.size)])
        goes_left = data.features[leaf.indices, feature] <= threshold
        left_idx, right_idx = leaf.indices[goes_left], leaf.indices[~goes_left]
        grown = TreeNode(
            leaf.counts,
            feature=feature,
            threshold=threshold,
            left=TreeNode(np.bincount(data.labels[left_idx], minlength=data.num_classes), indices=left_idx),
            right=TreeNode(np.bincount(data.labels[right_idx], minlength=data.num_classes), indices=right_idx),
            indices=leaf.indices,
        )
        tree = DecisionTree(_copy_replace(tree.root, leaf, grown), data.num_classes)
    return tree


def run_chain(
    data: Dataset,
    config: McmcConfig,
    restart_index: int = 0,
    seed=None,
    loglik_fn=None,
    trace=None,
) -> list[ChainSample]:
    """One restart: burn in, then retain every thinning-th post-burn-in state.

    ``loglik_fn`` is a diagnostics hook replacing the marginal likelihood
    (e.g. a constant function turns the chain into a prior sampler). ``trace``
    is an optional writable text stream receiving one line per retained
    sample: restart, step, leaf count, log posterior.
    """
    if data.n < 1:
        raise ValueError("cannot run a chain on an empty dataset")
    rng = np.random.default_rng(seed)
    loglik = loglik_fn if loglik_fn is not None else log_marginal_likelihood
    tree = sample_prior_tree(data, config.max_leaves, rng)
    log_lik = loglik(tree, data, config.dirichlet_alpha)
    log_pri = _log_prior_cached(tree, config.max_leaves, data)

    for _ in range(config.burn_in):
        tree, log_lik, log_pri, _ = _transition(tree, log_lik, log_pri, data, config, rng, loglik)

    samples: list[ChainSample] = []
    for step in range(1, config.post_burn_in + 1):
        tree, log_lik, log_pri, _ = _transition(tree, log_lik, log_pri, data, config, rng, loglik)
        if (step - 1) % config.thinning == 0:
            samples.append(ChainSample(tree=tree, restart_index=restart_index, step_index=step))
            if trace is not None:
                trace.write(
                    f"{restart_index} {step} {tree_size(tree)} {log_lik + log_pri:.6f}\n"
                )
    return samples


def run_with_restarts(
    data: Dataset, config: McmcConfig, loglik_fn=None, trace_path=None
) -> PosteriorEnsemble:
    """Pool retained samples from config.restarts independent chains.

    Chain seeds derive from config.seed as SeedSequence((seed, restart)), so
    the pooled ensemble does not depend on execution order.
    """
    trace = open(trace_path, "w", encoding="utf-8") if trace_path is not None else None
    try:
        samples: list[ChainSample] = []
        for restart in range(config.restarts):
            samples.extend(
                run_chain(
                    data,
                    config,
                    restart_index=restart,
                    seed=np.random.SeedSequence((config.seed, restart)),
                    loglik_fn=loglik_fn,
                    trace=trace,
                )
            )
    finally:
        if trace is not None:
            trace.close()
    return PosteriorEnsemble(samples=tuple(samples))


def bayes_predictive_matrix(
    ens: PosteriorEnsemble, features: np.ndarray, mode: str = "average", alpha: float = 1.0
) -> np.ndarray:
    """Posterior-averaged class probabilities for each feature row, (n, C).

    average: equal-weight mean over samples of the leaf Dirichlet posterior
    mean (n_c + alpha)/(n + C*alpha). vote: fraction of samples whose argmax
    class at the point is c. Repeated tree objects (rejected steps) are
    evaluated once and weighted.
    """
    if ens.n < 1:
        raise ValueError("posterior ensemble is empty")
    if mode not in ("average", "vote"):
        raise ValueError(f"unknown mode {mode!r}; expected 'vote' or 'average'")
    features = np.asarray(features, dtype=np.float64)
    num_classes = ens.samples[0].tree.num_classes
    out = np.zeros((features.shape[0], num_classes))

    distinct: dict[int, list] = {}
    for sample in ens.samples:
        entry = distinct.setdefault(id(sample.tree), [sample.tree, 0])
        entry[1] += 1

    rows = np.arange(features.shape[0])
    for tree, weight in distinct.values():
        posterior = leaf_posterior_matrix(tree, features, alpha=alpha)
        if mode == "average":
            out += weight * posterior
        else:
            out[rows, np.argmax(posterior, axis=1)] += weight
    out /= ens.n
    return out


def bayes_predictive(ens: PosteriorEnsemble, x, mode: str = "average", alpha: float = 1.0) -> np.ndarray:
    """Posterior-averaged class probabilities at a single point."""
    x = np.asarray(x, dtype=np.float64)
    return bayes_predictive_matrix(ens, x[None, :], mode=mode, alpha=alpha)[0]


def ensemble_mean_size(ens: PosteriorEnsemble) -> tuple[float, float]:
    """Sample mean and sample standard deviation of the leaf counts."""
    if ens.n < 1:
        raise ValueError("posterior ensemble is empty")
    sizes = np.array([tree_size(sample.tree) for sample in ens.samples], dtype=np.float64)
    std = float(sizes.std(ddof=1)) if sizes.size > 1 else 0.0
    return float(sizes.mean()), std
