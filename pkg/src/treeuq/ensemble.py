"""Ensembles of split-randomised decision trees.

Each tree picks every split uniformly among its top-20 information-gain
candidates, so independently seeded trees disagree near class boundaries.
The ensemble posterior either averages per-tree posteriors or counts
per-tree argmax votes; the vote form is what the uncertainty envelope
consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .tree import DecisionTree, grow_randomized, leaf_posterior_matrix

__all__ = [
    "EnsembleConfig",
    "RandomizedEnsemble",
    "best_single_tree",
    "default_min_leaf",
    "ensemble_posterior",
    "ensemble_posterior_matrix",
    "train_ensemble",
]

# Pruning rule: large training sets afford a coarser pruning factor.
LARGE_TRAIN_THRESHOLD = 300
MIN_LEAF_LARGE = 30
MIN_LEAF_SMALL = 5


@dataclass(frozen=True)
class EnsembleConfig:
    """Training settings for a randomised ensemble.

    min_leaf=None applies the size rule: 30 when the training set has more
    than 300 points, else 5.
    """

    n_trees: int = 200
    min_leaf: int | None = None
    top_k: int = 20
    seed: int = 0


@dataclass(frozen=True)
class RandomizedEnsemble:
    trees: tuple[DecisionTree, ...]
    config: EnsembleConfig

    @property
    def num_classes(self) -> int:
        return self.trees[0].num_classes


def default_min_leaf(train_size: int) -> int:
    return MIN_LEAF_LARGE if train_size > LARGE_TRAIN_THRESHOLD else MIN_LEAF_SMALL


def train_ensemble(train: Dataset, config: EnsembleConfig = EnsembleConfig()) -> RandomizedEnsemble:
    """Grow config.n_trees randomised trees with independent seed streams.

    Per-tree seeds derive from config.seed as SeedSequence((seed, tree_index)),
    so any tree is reproducible in isolation.
    """
    if config.n_trees < 1:
        raise ValueError(f"need n_trees >= 1, got {config.n_trees}")
    min_leaf = config.min_leaf if config.min_leaf is not None else default_min_leaf(train.n)
    resolved = replace(config, min_leaf=min_leaf)
    trees = tuple(
        grow_randomized(
            train,
            min_leaf=min_leaf,
            top_k=config.top_k,
            seed=np.random.SeedSequence((config.seed, i)),
        )
        for i in range(config.n_trees)
    )
    return RandomizedEnsemble(trees=trees, config=resolved)


def ensemble_posterior_matrix(
    ens: RandomizedEnsemble, features: np.ndarray, mode: str = "vote"
) -> np.ndarray:
    """Ensemble class posteriors for every row of a feature matrix, (n, C).

    vote: fraction of trees whose argmax lands on each class (per-tree argmax
    ties break toward the lower class index). average: mean of the per-tree
    smoothed posteriors.
    """
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    num_classes = ens.num_classes
    out = np.zeros((n, num_classes))
    if mode == "average":
        for tree in ens.trees:
            out += leaf_posterior_matrix(tree, features)
        out /= len(ens.trees)
    elif mode == "vote":
        rows = np.arange(n)
        for tree in ens.trees:
            winners = np.argmax(leaf_posterior_matrix(tree, features), axis=1)
            out[rows, winners] += 1.0
        out /= len(ens.trees)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'vote' or 'average'")
    return out


def ensemble_posterior(ens: RandomizedEnsemble, x, mode: str = "vote") -> np.ndarray:
    """Ensemble class posterior at a single point."""
    x = np.asarray(x, dtype=np.float64)
    return ensemble_posterior_matrix(ens, x[None, :], mode=mode)[0]


def best_single_tree(ens: RandomizedEnsemble, validation: Dataset) -> tuple[int, float]:
    """Index and accuracy of the tree with best argmax accuracy on validation.

    Ties go to the lowest tree index.
    """
    if validation.n < 1:
        raise ValueError("validation set is empty")
    accuracies = np.empty(len(ens.trees))
    for i, tree in enumerate(ens.trees):
        predicted = np.argmax(leaf_posterior_matrix(tree, validation.features), axis=1)
        accuracies[i] = np.mean(predicted == validation.labels)
    best = int(np.argmax(accuracies))
    return best, float(accuracies[best])
