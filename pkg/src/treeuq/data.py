"""Datasets, CSV ingestion, k-fold splits, and the Gaussian-mixture benchmark.

The synthetic benchmark is a two-class mixture of five isotropic Gaussians in
the plane. Because the class densities overlap, no classifier can beat the
Bayes rule on it; ``bayes_posterior`` evaluates that rule exactly and
``estimate_bayes_error`` measures its error rate by Monte Carlo.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dataset",
    "DatasetError",
    "FoldSplit",
    "GaussianMixtureSpec",
    "MixtureComponent",
    "bayes_posterior",
    "estimate_bayes_error",
    "kfold_split",
    "load_csv",
    "make_benchmark_mixture",
    "sample_mixture",
    "write_csv",
]


class DatasetError(ValueError):
    """Raised when a file cannot be ingested as a classification dataset."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with dense integer class labels.

    Attributes:
        features: (n, m) float matrix, no missing values.
        labels: (n,) int array with values in 0..num_classes-1.
        num_classes: number of classes C >= 2.
        feature_names: m column names.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if features.ndim != 2 or features.shape[0] < 1:
            raise DatasetError(f"features must be a non-empty 2-D matrix, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise DatasetError(
                f"labels shape {labels.shape} does not match {features.shape[0]} rows"
            )
        if self.num_classes < 2:
            raise DatasetError(f"need at least 2 classes, got {self.num_classes}")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise DatasetError("labels must lie in 0..num_classes-1")
        if len(self.feature_names) != features.shape[1]:
            raise DatasetError("feature_names must name every feature column")
        if not np.all(np.isfinite(features)):
            raise DatasetError("features contain non-finite values")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> Dataset:
        """Dataset restricted to the given row indices (copies)."""
        indices = np.asarray(indices)
        return Dataset(
            features=self.features[indices],
            labels=self.labels[indices],
            num_classes=self.num_classes,
            feature_names=self.feature_names,
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


@dataclass(frozen=True)
class MixtureComponent:
    """One isotropic Gaussian kernel of a labelled mixture."""

    weight: float
    mean: tuple[float, float]
    cov_scale: float
    class_index: int


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Mixture of labelled isotropic Gaussians in the plane."""

    components: tuple[MixtureComponent, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("mixture needs at least one component")
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"component weights must sum to 1, got {total!r}")
        for c in self.components:
            if not 0.0 < c.weight < 1.0:
                raise ValueError(f"weight {c.weight} outside (0, 1)")
            if c.cov_scale <= 0.0:
                raise ValueError(f"covariance scale {c.cov_scale} must be positive")
            if c.class_index < 0:
                raise ValueError("class indices must be non-negative")

    @property
    def num_classes(self) -> int:
        return max(c.class_index for c in self.components) + 1

    def class_priors(self) -> np.ndarray:
        priors = np.zeros(self.num_classes)
        for c in self.components:
            priors[c.class_index] += c.weight
        return priors


@dataclass(frozen=True)
class FoldSplit:
    """Assignment of n data points to k cross-validation folds."""

    fold_assignments: np.ndarray
    k: int

    def __post_init__(self) -> None:
        assignments = np.asarray(self.fold_assignments, dtype=np.int64)
        object.__setattr__(self, "fold_assignments", assignments)
        sizes = np.bincount(assignments, minlength=self.k)
        if len(sizes) != self.k or sizes.max() - sizes.min() > 1:
            raise ValueError("fold sizes must differ by at most 1")

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignments != fold)


def load_csv(path, label_column: str | int) -> Dataset:
    """Load a classification dataset from a headered CSV file.

    The label column is selected by header name or 0-based index. Label
    tokens are re-encoded densely as 0..C-1 in first-appearance order; every
    other column must parse as a real number.

    Raises:
        DatasetError: on unparsable cells (named by row and column), missing
            label column, ragged rows, or a single-class file.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: file is empty") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    if isinstance(label_column, int):
        if not -len(header) <= label_column < len(header):
            raise DatasetError(f"{path}: label column index {label_column} out of range")
        label_idx = label_column % len(header)
    else:
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DatasetError(f"{path}: no column named {label_column!r}") from None

    feature_names = tuple(name for i, name in enumerate(header) if i != label_idx)
    if not feature_names:
        raise DatasetError(f"{path}: no feature columns besides the label")
    if not rows:
        raise DatasetError(f"{path}: no data rows")

    label_codes: dict[str, int] = {}
    features = np.empty((len(rows), len(feature_names)), dtype=np.float64)
    labels = np.empty(len(rows), dtype=np.int64)
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        token = row[label_idx].strip()
        if not token:
            raise DatasetError(f"{path}: row {r}, column {header[label_idx]!r}: empty label")
        labels[r - 1] = label_codes.setdefault(token, len(label_codes))
        col = 0
        for i, cell in enumerate(row):
            if i == label_idx:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: row {r}, column {header[i]!r}: cannot parse {cell.strip()!r} as a number"
                ) from None
            if not np.isfinite(value):
                raise DatasetError(f"{path}: row {r}, column {header[i]!r}: non-finite value")
            features[r - 1, col] = value
            col += 1

    if len(label_codes) < 2:
        raise DatasetError(f"{path}: only one class present; classification is undefined")
    return Dataset(
        features=features,
        labels=labels,
        num_classes=len(label_codes),
        feature_names=feature_names,
    )


def write_csv(dataset: Dataset, path) -> None:
    """Write a dataset in the ingestion schema: header row, label column 'class'."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*dataset.feature_names, "class"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def make_benchmark_mixture() -> GaussianMixtureSpec:
    """The five-Gaussian two-class benchmark mixture.

    Three kernels generate class 0 and two generate class 1; all kernels have
    isotropic covariance 0.03*I. The classes overlap, so the benchmark has a
    known non-zero Bayes error (about 7.8%; see ``estimate_bayes_error``).
    """
    return GaussianMixtureSpec(
        components=(
            MixtureComponent(0.16, (1.0, 1.0), 0.03, 0),
            MixtureComponent(0.17, (0.7, 0.3), 0.03, 0),
            MixtureComponent(0.17, (0.3, 0.3), 0.03, 0),
            MixtureComponent(0.25, (-0.3, 0.7), 0.03, 1),
            MixtureComponent(0.25, (0.4, 0.7), 0.03, 1),
        )
    )


def sample_mixture(spec: GaussianMixtureSpec, n: int, seed) -> Dataset:
    """Draw n labelled points from the mixture; deterministic given seed."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    weights = np.array([c.weight for c in spec.components])
    means = np.array([c.mean for c in spec.components])
    scales = np.array([c.cov_scale for c in spec.components])
    classes = np.array([c.class_index for c in spec.components])

    which = rng.choice(len(spec.components), size=n, p=weights)
    noise = rng.standard_normal((n, means.shape[1]))
    features = means[which] + noise * np.sqrt(scales[which])[:, None]
    names = tuple(f"x{i + 1}" for i in range(means.shape[1]))
    return Dataset(
        features=features,
        labels=classes[which],
        num_classes=spec.num_classes,
        feature_names=names,
    )


def _component_log_densities(spec: GaussianMixtureSpec, points: np.ndarray) -> np.ndarray:
    """log(weight * N(x; mean, scale*I)) for each (point, component)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    means = np.array([c.mean for c in spec.components])
    scales = np.array([c.cov_scale for c in spec.components])
    weights = np.array([c.weight for c in spec.components])
    d = points.shape[1]
    with np.errstate(over="ignore"):
        sq = ((points[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        return (
            np.log(weights)[None, :]
            - 0.5 * d * np.log(2.0 * np.pi * scales)[None, :]
            - 0.5 * sq / scales[None, :]
        )


def _posterior_matrix(spec: GaussianMixtureSpec, points: np.ndarray) -> np.ndarray:
    """Exact class posteriors for a batch of points, (n, C)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    logd = _component_log_densities(spec, points)
    classes = np.array([c.class_index for c in spec.components])
    num_classes = spec.num_classes
    shift = logd.max(axis=1, keepdims=True)
    underflow = ~np.isfinite(shift[:, 0])
    dens = np.exp(logd - np.where(np.isfinite(shift), shift, 0.0))
    per_class = np.zeros((points.shape[0], num_classes))
    for c in range(num_classes):
        per_class[:, c] = dens[:, classes == c].sum(axis=1)
    total = per_class.sum(axis=1, keepdims=True)
    priors = spec.class_priors()
    out = np.where(total > 0, per_class / np.where(total > 0, total, 1.0), priors[None, :])
    if underflow.any():
        out[underflow] = priors[None, :]
    return out


def bayes_posterior(spec: GaussianMixtureSpec, x) -> np.ndarray:
    """Exact P(class | x) under the mixture.

    Falls back to the class priors if every component density underflows.
    """
    x = np.asarray(x, dtype=np.float64)
    return _posterior_matrix(spec, x[None, :])[0]


def estimate_bayes_error(spec: GaussianMixtureSpec, n: int, seed) -> float:
    """Monte-Carlo error rate of the Bayes-optimal (argmax posterior) rule."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    data = sample_mixture(spec, n, seed)
    predicted = np.argmax(_posterior_matrix(spec, data.features), axis=1)
    return float(np.mean(predicted != data.labels))


def kfold_split(n: int, k: int, seed) -> FoldSplit:
    """Random partition of 0..n-1 into k folds of near-equal size."""
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if k > n:
        raise ValueError(f"cannot split {n} points into {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    start = 0
    for fold, size in enumerate(sizes):
        assignments[perm[start : start + size]] = fold
        start += size
    return FoldSplit(fold_assignments=assignments, k=k)
