"""Three-way classification outcomes at a confidence threshold.

Given an ensemble's class posterior for a test point, the outcome is
confidently correct when the top class reaches the confidence probability p0
and matches the truth, confidently incorrect when it reaches p0 on a wrong
class, and uncertain otherwise. The lowest achievable top probability is
1/C, so p0 must exceed it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EnvelopeOutcome",
    "EnvelopeSummary",
    "classify_outcome",
    "cross_fold_summary",
    "envelope_rates",
    "p_min",
]

POSTERIOR_SUM_TOLERANCE = 1e-6


class EnvelopeOutcome(enum.Enum):
    CONFIDENTLY_CORRECT = "confidently_correct"
    CONFIDENTLY_INCORRECT = "confidently_incorrect"
    UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class EnvelopeSummary:
    """Outcome rates over a test set, plus plain argmax accuracy.

    For cross-fold summaries, folds holds the per-fold summaries and the
    two_sigma_* fields hold twice the sample standard deviation of each rate
    across folds.
    """

    rate_correct: float
    rate_uncertain: float
    rate_incorrect: float
    accuracy: float
    n: int
    folds: tuple[EnvelopeSummary, ...] | None = None
    two_sigma_correct: float | None = None
    two_sigma_uncertain: float | None = None
    two_sigma_incorrect: float | None = None


def p_min(num_classes: int) -> float:
    """Smallest achievable top vote share: 1/C."""
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    return 1.0 / num_classes


def _check_posterior(posterior: np.ndarray) -> np.ndarray:
    posterior = np.asarray(posterior, dtype=np.float64)
    if posterior.ndim != 1 or posterior.size < 2:
        raise ValueError(f"posterior must be a vector over >= 2 classes, got shape {posterior.shape}")
    if abs(posterior.sum() - 1.0) > POSTERIOR_SUM_TOLERANCE or posterior.min() < -POSTERIOR_SUM_TOLERANCE:
        raise ValueError(f"invalid posterior {posterior!r}: entries must be probabilities summing to 1")
    return posterior


def _check_p0(p0: float, num_classes: int) -> None:
    if not p_min(num_classes) < p0 <= 1.0:
        raise ValueError(f"p0 must lie in (1/{num_classes}, 1], got {p0}")


def classify_outcome(posterior, true_label: int, p0: float) -> EnvelopeOutcome:
    """Outcome of one prediction at confidence threshold p0.

    The predicted class is the argmax of the posterior (ties to the lower
    index).
    """
    posterior = _check_posterior(posterior)
    _check_p0(p0, posterior.size)
    predicted = int(np.argmax(posterior))
    if posterior[predicted] >= p0:
        if predicted == true_label:
            return EnvelopeOutcome.CONFIDENTLY_CORRECT
        return EnvelopeOutcome.CONFIDENTLY_INCORRECT
    return EnvelopeOutcome.UNCERTAIN


def envelope_rates(posteriors, labels, p0: float) -> EnvelopeSummary:
    """Outcome fractions and argmax accuracy over one test set."""
    posteriors = np.asarray(posteriors, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if posteriors.ndim != 2 or posteriors.shape[0] != labels.shape[0]:
        raise ValueError(
            f"got {posteriors.shape[0] if posteriors.ndim == 2 else 'malformed'} posteriors "
            f"for {labels.shape[0]} labels"
        )
    if posteriors.shape[0] < 1:
        raise ValueError("need at least one prediction")
    sums = posteriors.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > POSTERIOR_SUM_TOLERANCE):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise ValueError(f"posterior {bad} sums to {sums[bad]!r}, not 1")
    _check_p0(p0, posteriors.shape[1])

    predicted = np.argmax(posteriors, axis=1)
    confident = posteriors[np.arange(len(labels)), predicted] >= p0
    correct = predicted == labels
    n = len(labels)
    rate_correct = float(np.mean(confident & correct))
    rate_incorrect = float(np.mean(confident & ~correct))
    return EnvelopeSummary(
        rate_correct=rate_correct,
        rate_uncertain=float(np.mean(~confident)),
        rate_incorrect=rate_incorrect,
        accuracy=float(np.mean(correct)),
        n=n,
    )


def cross_fold_summary(fold_summaries) -> EnvelopeSummary:
    """Mean rates across folds with 2-sigma interval widths.

    Each width is twice the sample standard deviation of the rate across
    folds (not a +/- half-width).
    """
    folds = tuple(fold_summaries)
    if len(folds) < 2:
        raise ValueError(f"need at least 2 folds, got {len(folds)}")
    correct = np.array([f.rate_correct for f in folds])
    uncertain = np.array([f.rate_uncertain for f in folds])
    incorrect = np.array([f.rate_incorrect for f in folds])
    accuracy = np.array([f.accuracy for f in folds])
    return EnvelopeSummary(
        rate_correct=float(correct.mean()),
        rate_uncertain=float(uncertain.mean()),
        rate_incorrect=float(incorrect.mean()),
        accuracy=float(accuracy.mean()),
        n=int(sum(f.n for f in folds)),
        folds=folds,
        two_sigma_correct=float(2.0 * correct.std(ddof=1)),
        two_sigma_uncertain=float(2.0 * uncertain.std(ddof=1)),
        two_sigma_incorrect=float(2.0 * incorrect.std(ddof=1)),
    )
