"""All-way, variable-shot evaluation with per-class (macro) and mean (micro)
accuracy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classifier import SupportSet, classify_transformed
from .errors import DimensionMismatchError, SplitError
from .features import FeatureSet, apply_transform_rows, fit_transform


@dataclass(frozen=True, eq=False)
class MultiwaySplit:
    support: SupportSet
    test_labels: np.ndarray
    test_vectors: np.ndarray

    def __post_init__(self):
        labels = np.array(self.test_labels, dtype=np.int64).reshape(-1)
        vectors = np.array(self.test_vectors, dtype=np.float64)
        if vectors.size == 0:
            vectors = vectors.reshape(0, self.support.dimension)
        if vectors.ndim != 2 or vectors.shape[0] != labels.shape[0]:
            raise DimensionMismatchError(
                f"{labels.shape[0]} test labels for test vectors of shape {vectors.shape}"
            )
        if labels.size and vectors.shape[1] != self.support.dimension:
            raise DimensionMismatchError(
                f"test dimension {vectors.shape[1]} != support dimension {self.support.dimension}"
            )
        missing = sorted(set(labels.tolist()) - set(self.support.class_ids))
        if missing:
            raise SplitError(f"test class {missing[0]} has no support records")
        labels.setflags(write=False)
        vectors.setflags(write=False)
        object.__setattr__(self, "test_labels", labels)
        object.__setattr__(self, "test_vectors", vectors)

    @property
    def test(self) -> list[tuple[int, np.ndarray]]:
        return list(zip(self.test_labels.tolist(), self.test_vectors))


@dataclass(frozen=True)
class ClassResult:
    class_id: int
    test_count: int
    correct: int


@dataclass(frozen=True)
class MultiwayReport:
    per_class_accuracy: float
    mean_accuracy: float
    class_breakdown: tuple  # ClassResult per support class, ascending id


def aggregate(breakdown) -> tuple[float, float]:
    """``(macro, micro)`` accuracy; classes without test records are skipped."""
    scored = [r for r in breakdown if r.test_count > 0]
    if not scored:
        raise SplitError("split has no test records")
    macro = sum(r.correct / r.test_count for r in scored) / len(scored)
    micro = sum(r.correct for r in scored) / sum(r.test_count for r in scored)
    return macro, micro


def evaluate_multiway(split: MultiwaySplit, base: Optional[FeatureSet], kind) -> MultiwayReport:
    state = fit_transform(kind, base)
    ids, cents = [], []
    for class_id, vectors in split.support.entries:
        ids.append(class_id)
        cents.append(apply_transform_rows(state, vectors).mean(axis=0))
    predicted = classify_transformed(
        ids, np.stack(cents), apply_transform_rows(state, split.test_vectors)
    )
    truth = split.test_labels
    hits = predicted == truth
    breakdown = []
    for class_id in sorted(ids):
        mask = truth == class_id
        breakdown.append(
            ClassResult(class_id, int(mask.sum()), int(hits[mask].sum()))
        )
    macro, micro = aggregate(breakdown)
    return MultiwayReport(macro, micro, tuple(breakdown))
