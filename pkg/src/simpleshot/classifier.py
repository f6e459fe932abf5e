"""Euclidean nearest-neighbor and nearest-centroid classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError
from .features import TransformState, apply_transform, apply_transform_rows

# Queries are scored in chunks to bound the (chunk, classes, D) temporary.
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True, eq=False)
class SupportSet:
    """Labeled support vectors grouped by class.

    ``entries`` is a tuple of ``(class_id, (k, D) array)`` pairs with distinct
    class ids. Shot counts may differ between classes.
    """

    entries: tuple

    def __post_init__(self):
        entries = []
        seen = set()
        dim = None
        for class_id, vectors in self.entries:
            class_id = int(class_id)
            if class_id in seen:
                raise ValueError(f"duplicate class {class_id} in support set")
            seen.add(class_id)
            vectors = np.array(vectors, dtype=np.float64, copy=True)
            if vectors.ndim == 1:
                vectors = vectors[None, :]
            if vectors.ndim != 2 or vectors.shape[0] < 1:
                raise ValueError(f"class {class_id} needs at least one support vector")
            if dim is None:
                dim = vectors.shape[1]
            elif vectors.shape[1] != dim:
                raise DimensionMismatchError(
                    f"class {class_id} vectors have dimension {vectors.shape[1]}, expected {dim}"
                )
            vectors.setflags(write=False)
            entries.append((class_id, vectors))
        if not entries:
            raise ValueError("support set is empty")
        object.__setattr__(self, "entries", tuple(entries))

    @classmethod
    def from_arrays(cls, labels, vectors) -> "SupportSet":
        """Group rows of ``vectors`` by label, classes in ascending order."""
        labels = np.asarray(labels)
        vectors = np.asarray(vectors)
        return cls(
            tuple((int(c), vectors[labels == c]) for c in np.unique(labels))
        )

    @property
    def dimension(self) -> int:
        return self.entries[0][1].shape[1]

    @property
    def class_ids(self) -> list[int]:
        return [c for c, _ in self.entries]

    def shots(self) -> dict[int, int]:
        return {c: v.shape[0] for c, v in self.entries}


@dataclass(frozen=True)
class Prediction:
    predicted_class: int
    distances: tuple  # ((class_id, distance), ...) ascending


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")
    diff = a - b
    return float(np.sqrt(np.sum(diff * diff)))


def pairwise_distances(queries, points) -> np.ndarray:
    """``(n, m)`` Euclidean distances between rows of two matrices.

    Uses explicit differences rather than the ``|a|^2 + |b|^2 - 2ab``
    expansion, so identical rows give exactly zero.
    """
    queries = np.asarray(queries, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    if queries.ndim != 2 or points.ndim != 2 or queries.shape[1] != points.shape[1]:
        raise DimensionMismatchError(
            f"cannot compare {queries.shape} queries with {points.shape} points"
        )
    n, m = queries.shape[0], points.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // max(1, m * queries.shape[1]))
    for lo in range(0, n, step):
        diff = queries[lo:lo + step, None, :] - points[None, :, :]
        out[lo:lo + step] = np.sqrt(np.sum(diff * diff, axis=2))
    return out


def class_centroids(support: SupportSet) -> list[tuple[int, np.ndarray]]:
    return [(c, v.mean(axis=0)) for c, v in support.entries]


def _transformed_centroids(support: SupportSet, transform: TransformState):
    # Transform each support vector first, then average; centroids are not
    # re-normalized.
    ids, cents = [], []
    for class_id, vectors in support.entries:
        ids.append(class_id)
        cents.append(apply_transform_rows(transform, vectors).mean(axis=0))
    order = np.argsort(ids, kind="stable")
    return np.asarray(ids, dtype=np.int64)[order], np.stack(cents)[order]


def _argmin_rows(dist: np.ndarray) -> np.ndarray:
    # np.argmin returns the first minimum; callers sort columns by class id.
    return np.argmin(dist, axis=1)


def nearest_centroid(support: SupportSet, query, transform: TransformState) -> Prediction:
    query = np.asarray(query, dtype=np.float64)
    if query.ndim != 1 or query.shape[0] != support.dimension:
        raise DimensionMismatchError(
            f"query shape {query.shape} does not match support dimension {support.dimension}"
        )
    ids, cents = _transformed_centroids(support, transform)
    q = apply_transform(transform, query)
    dist = pairwise_distances(q[None, :], cents)[0]
    # ids are ascending, so a stable sort breaks ties toward the smaller id.
    order = np.argsort(dist, kind="stable")
    ranked = tuple((int(ids[i]), float(dist[i])) for i in order)
    return Prediction(ranked[0][0], ranked)


def classify(support: SupportSet, queries, transform: TransformState) -> np.ndarray:
    """Predicted class for every row of ``queries`` (batched nearest_centroid)."""
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2 or queries.shape[1] != support.dimension:
        raise DimensionMismatchError(
            f"queries shape {queries.shape} does not match support dimension {support.dimension}"
        )
    ids, cents = _transformed_centroids(support, transform)
    q = apply_transform_rows(transform, queries)
    return ids[_argmin_rows(pairwise_distances(q, cents))]


def classify_transformed(class_ids: Sequence[int], centroids, queries) -> np.ndarray:
    """Nearest-centroid labels for already-transformed queries and centroids.

    ``class_ids`` need not be sorted; ties still go to the smallest id.
    """
    class_ids = np.asarray(class_ids, dtype=np.int64)
    order = np.argsort(class_ids, kind="stable")
    dist = pairwise_distances(queries, np.asarray(centroids)[order])
    return class_ids[order][_argmin_rows(dist)]


def nearest_neighbor(labels: Iterable[int], points, query) -> int:
    """Plain 1-NN over raw points; ties go to the smallest label."""
    labels = np.asarray(list(labels), dtype=np.int64)
    dist = pairwise_distances(np.asarray(query, dtype=np.float64)[None, :], points)[0]
    best = dist.min()
    return int(labels[dist == best].min())
