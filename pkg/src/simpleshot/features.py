"""Labeled feature sets and the UN / L2N / CL2N feature transformations."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatchError,
    EmptySetError,
    NonFiniteError,
    ZeroVectorError,
)

# Norms at or below this are treated as the zero vector.
ZERO_NORM = 1e-12

ROLES = ("base", "validation", "novel")
_MAX_LABEL = 2**32 - 1


class TransformKind(str, enum.Enum):
    UN = "un"
    L2N = "l2n"
    CL2N = "cl2n"

    @classmethod
    def parse(cls, value) -> "TransformKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(
                f"unknown transform {value!r}; expected one of un, l2n, cl2n"
            ) from None


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureRecord:
    label: int
    vector: np.ndarray


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """An ordered, immutable collection of labeled D-dimensional vectors.

    Vectors are stored as a float32 ``(N, D)`` matrix; labels as an int64
    array of length N. ``role`` is informational only.
    """

    labels: np.ndarray
    vectors: np.ndarray
    role: Optional[str] = None

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.float32, copy=True)
        if vectors.ndim != 2:
            raise DimensionMismatchError("vectors must be a 2-D (N, D) array")
        if vectors.shape[1] < 1:
            raise DimensionMismatchError("feature dimension must be at least 1")
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if labels.shape[0] != vectors.shape[0]:
            raise DimensionMismatchError(
                f"{labels.shape[0]} labels for {vectors.shape[0]} vectors"
            )
        if labels.size and (labels.min() < 0 or labels.max() > _MAX_LABEL):
            raise ValueError("labels must be unsigned 32-bit integers")
        bad = ~np.isfinite(vectors).all(axis=1)
        if bad.any():
            raise NonFiniteError(
                f"non-finite value in record {int(np.flatnonzero(bad)[0])}"
            )
        if self.role is not None and self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        object.__setattr__(self, "vectors", _frozen(vectors))
        object.__setattr__(self, "labels", _frozen(labels))

    @classmethod
    def empty(cls, dimension: int, role: Optional[str] = None) -> "FeatureSet":
        return cls(np.zeros(0, np.int64), np.zeros((0, dimension), np.float32), role)

    @classmethod
    def from_records(
        cls,
        records: Iterable[FeatureRecord],
        dimension: int,
        role: Optional[str] = None,
    ) -> "FeatureSet":
        records = list(records)
        if not records:
            return cls.empty(dimension, role)
        for i, r in enumerate(records):
            if np.shape(r.vector) != (dimension,):
                raise DimensionMismatchError(
                    f"record {i} has shape {np.shape(r.vector)}, expected ({dimension},)"
                )
        return cls(
            [r.label for r in records],
            np.stack([np.asarray(r.vector) for r in records]),
            role,
        )

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def records(self) -> list[FeatureRecord]:
        return [
            FeatureRecord(int(l), v) for l, v in zip(self.labels, self.vectors)
        ]

    def classes(self) -> np.ndarray:
        """Distinct labels, ascending."""
        return np.unique(self.labels)

    def subset(self, indices: Sequence[int], role: Optional[str] = None) -> "FeatureSet":
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureSet(self.labels[idx], self.vectors[idx], role or self.role)

    def with_role(self, role: Optional[str]) -> "FeatureSet":
        return FeatureSet(self.labels, self.vectors, role)


def compute_base_mean(base: FeatureSet) -> np.ndarray:
    """Example-weighted mean of every record in ``base``.

    Reduction runs in float64 (numpy's pairwise summation) regardless of the
    float32 storage.
    """
    if len(base) == 0:
        raise EmptySetError("cannot compute the mean of an empty feature set")
    total = np.sum(base.vectors, axis=0, dtype=np.float64)
    return total / len(base)


def l2_normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError("l2_normalize expects a 1-D vector")
    return l2_normalize_rows(v[None, :])[0]


def l2_normalize_rows(m) -> np.ndarray:
    """Row-wise :func:`l2_normalize` for an ``(N, D)`` matrix."""
    m = np.asarray(m, dtype=np.float64)
    norms = np.sqrt(np.sum(m * m, axis=1, keepdims=True))
    small = ~(norms[:, 0] > ZERO_NORM)
    if small.any():
        i = int(np.flatnonzero(small)[0])
        raise ZeroVectorError(
            f"cannot L2-normalize a vector with norm {norms[i, 0]:g} (row {i})"
        )
    return m / norms


@dataclass(frozen=True, eq=False)
class TransformState:
    kind: TransformKind
    base_mean: Optional[np.ndarray] = None

    def __post_init__(self):
        kind = TransformKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is TransformKind.CL2N:
            if self.base_mean is None:
                raise ValueError("CL2N transform requires a base mean")
            mean = np.array(self.base_mean, dtype=np.float64).reshape(-1)
            if mean.size < 1 or not np.isfinite(mean).all():
                raise ValueError("base mean must be a finite, non-empty vector")
            object.__setattr__(self, "base_mean", _frozen(mean))
        elif self.base_mean is not None:
            raise ValueError(f"{kind.name} transform takes no base mean")

    @property
    def dimension(self) -> Optional[int]:
        """Feature dimension the state is bound to, or None when unbound."""
        return None if self.base_mean is None else self.base_mean.shape[0]


def fit_transform(kind, base: Optional[FeatureSet] = None) -> TransformState:
    kind = TransformKind.parse(kind)
    if kind is TransformKind.CL2N:
        if base is None:
            raise EmptySetError("CL2N needs a base feature set")
        return TransformState(kind, compute_base_mean(base))
    return TransformState(kind)


def _check_dim(state: TransformState, d: int):
    if state.dimension is not None and state.dimension != d:
        raise DimensionMismatchError(
            f"vector dimension {d} does not match transform dimension {state.dimension}"
        )


def apply_transform(state: TransformState, v) -> np.ndarray:
    """Transform one vector. Output is float64."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError("apply_transform expects a 1-D vector")
    _check_dim(state, v.shape[0])
    if state.kind is TransformKind.UN:
        return v.copy()
    if state.kind is TransformKind.L2N:
        return l2_normalize(v)
    return l2_normalize(v - state.base_mean)


def apply_transform_rows(state: TransformState, m) -> np.ndarray:
    """Transform every row of an ``(N, D)`` matrix; same arithmetic as
    :func:`apply_transform` row by row."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatchError("apply_transform_rows expects a 2-D matrix")
    _check_dim(state, m.shape[1])
    if state.kind is TransformKind.UN:
        return m.copy()
    if state.kind is TransformKind.L2N:
        return l2_normalize_rows(m)
    return l2_normalize_rows(m - state.base_mean)
