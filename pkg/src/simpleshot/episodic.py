"""K-shot C-way episodic evaluation with 95% confidence intervals.

Every episode draws its randomness from a generator seeded by a hash of
``(seed, episode_index)`` alone, so episodes can be evaluated in any order
or in parallel and still reproduce the serial result exactly.
"""

from __future__ import annotations

import hashlib
import math
import statistics
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classifier import SupportSet, classify_transformed
from .errors import (
    ConfigError,
    InsufficientClassesError,
    InsufficientDataError,
    InsufficientRecordsError,
)
from .features import FeatureSet, apply_transform_rows, fit_transform

Z_95 = 1.96


@dataclass(frozen=True)
class EpisodeSpec:
    ways: int
    shots: int
    queries: int = 15
    episodes: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.ways < 2:
            raise ConfigError(f"ways must be >= 2, got {self.ways}")
        if self.shots < 1:
            raise ConfigError(f"shots must be >= 1, got {self.shots}")
        if self.queries < 1:
            raise ConfigError(f"queries must be >= 1, got {self.queries}")
        if self.episodes < 1:
            raise ConfigError(f"episodes must be >= 1, got {self.episodes}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True, eq=False)
class Episode:
    support: SupportSet
    queries: tuple  # ((true_class, vector), ...)
    support_indices: tuple  # per class, record indices into the source set
    query_indices: tuple

    @property
    def classes(self) -> list[int]:
        return self.support.class_ids


@dataclass(frozen=True)
class AccuracyReport:
    mean_accuracy: float
    ci95_halfwidth: float
    per_episode_accuracies: tuple
    episodes: int


def episode_rng(seed: int, episode_index: int) -> np.random.Generator:
    """PCG64 generator keyed by a BLAKE2b hash of ``(seed, episode_index)``."""
    digest = hashlib.blake2b(
        struct.pack("<QQ", seed, episode_index), digest_size=16
    ).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))


class _ClassIndex:
    """Record indices of each class, precomputed once per feature set."""

    def __init__(self, labels: np.ndarray):
        self.classes = np.unique(labels)
        order = np.argsort(labels, kind="stable")
        bounds = np.searchsorted(labels[order], self.classes, side="left")
        ends = np.append(bounds[1:], len(labels))
        self.members = [order[a:b] for a, b in zip(bounds, ends)]

    def check(self, spec: EpisodeSpec):
        if len(self.classes) < spec.ways:
            raise InsufficientClassesError(
                f"{spec.ways}-way episodes need {spec.ways} classes, "
                f"feature set has {len(self.classes)}"
            )
        need = spec.shots + spec.queries
        for c, members in zip(self.classes, self.members):
            if len(members) < need:
                raise InsufficientRecordsError(int(c), len(members), need)

    def draw(self, spec: EpisodeSpec, episode_index: int):
        """Record indices ``(classes, support (C, K), query (C, Q))``."""
        rng = episode_rng(spec.seed, episode_index)
        picked = rng.choice(len(self.classes), size=spec.ways, replace=False)
        need = spec.shots + spec.queries
        rows = np.stack(
            [rng.choice(self.members[i], size=need, replace=False) for i in picked]
        )
        return self.classes[picked], rows[:, : spec.shots], rows[:, spec.shots:]


def sample_episode(novel: FeatureSet, spec: EpisodeSpec, episode_index: int) -> Episode:
    index = _ClassIndex(novel.labels)
    index.check(spec)
    classes, sup, qry = index.draw(spec, episode_index)
    support = SupportSet(
        tuple((int(c), novel.vectors[rows]) for c, rows in zip(classes, sup))
    )
    queries = tuple(
        (int(c), novel.vectors[i].astype(np.float64))
        for c, rows in zip(classes, qry)
        for i in rows
    )
    return Episode(
        support,
        queries,
        tuple(tuple(int(i) for i in r) for r in sup),
        tuple(tuple(int(i) for i in r) for r in qry),
    )


def confidence_interval_95(values: Sequence[float]) -> tuple[float, float]:
    """Mean and 95% normal half-width ``1.96 * s / sqrt(n)`` (s uses n - 1).

    Both statistics are computed with exact rational arithmetic, so a
    constant sample gives a half-width of exactly zero.
    """
    values = [float(v) for v in values]
    if len(values) < 2:
        raise InsufficientDataError(
            f"confidence interval needs at least 2 values, got {len(values)}"
        )
    mean = statistics.mean(values)
    s = statistics.stdev(values, xbar=mean)
    return mean, Z_95 * s / math.sqrt(len(values))


def _episode_accuracy(transformed: np.ndarray, labels: np.ndarray, index: _ClassIndex,
                      spec: EpisodeSpec, episode_index: int) -> float:
    classes, sup, qry = index.draw(spec, episode_index)
    centroids = transformed[sup].mean(axis=1)
    predicted = classify_transformed(classes, centroids, transformed[qry.reshape(-1)])
    correct = int(np.count_nonzero(predicted == labels[qry.reshape(-1)]))
    return correct / (spec.ways * spec.queries)


def evaluate(
    novel: FeatureSet,
    base: Optional[FeatureSet],
    spec: EpisodeSpec,
    kind,
    threads: int = 1,
) -> AccuracyReport:
    """Average nearest-centroid accuracy over ``spec.episodes`` sampled tasks.

    Novel features are transformed once up front; since the transform acts on
    each vector independently this matches transforming inside every episode.
    ``threads`` only changes wall-clock time.
    """
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    state = fit_transform(kind, base)
    index = _ClassIndex(novel.labels)
    index.check(spec)
    transformed = apply_transform_rows(state, novel.vectors)
    labels = novel.labels

    def run(i):
        return _episode_accuracy(transformed, labels, index, spec, i)

    if threads == 1:
        accs = [run(i) for i in range(spec.episodes)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            accs = list(pool.map(run, range(spec.episodes)))
    if len(accs) >= 2:
        mean, half = confidence_interval_95(accs)
    else:
        mean, half = accs[0], 0.0
    return AccuracyReport(mean, half, tuple(accs), spec.episodes)
