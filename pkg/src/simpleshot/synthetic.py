"""Gaussian-mixture feature sets for desk-scale experiments.

Class means sit around a shared offset ``offset_norm * u`` with
``u = (1, ..., 1) / sqrt(D)``; each record is its class mean plus isotropic
noise. The first half of the classes form the base set, the rest the novel
set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .features import FeatureSet


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int
    dimension: int
    records_per_class: int
    class_spread: float
    within_spread: float
    offset_norm: float
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError(f"need at least 2 classes, got {self.num_classes}")
        if self.dimension < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.dimension}")
        if self.records_per_class < 1:
            raise ConfigError(f"records per class must be >= 1, got {self.records_per_class}")
        for name in ("class_spread", "within_spread", "offset_norm"):
            value = getattr(self, name)
            if not value >= 0 or not np.isfinite(value):
                raise ConfigError(f"{name} must be finite and >= 0, got {value}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def num_base_classes(self) -> int:
        return self.num_classes // 2


PRESETS = {
    "centering-benefit": SyntheticSpec(
        num_classes=20,
        dimension=64,
        records_per_class=100,
        class_spread=1.0,
        within_spread=0.5,
        offset_norm=50.0,
        seed=42,
    ),
}


def preset(name: str, **overrides) -> SyntheticSpec:
    try:
        spec = PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
    return replace(spec, **overrides)


def offset_direction(dimension: int) -> np.ndarray:
    return np.full(dimension, 1.0 / np.sqrt(dimension))


def gen_synthetic(spec: SyntheticSpec) -> tuple[FeatureSet, FeatureSet]:
    """Return ``(base, novel)`` feature sets; labels are class indices."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    c, d, r = spec.num_classes, spec.dimension, spec.records_per_class
    means = spec.offset_norm * offset_direction(d) + spec.class_spread * rng.standard_normal((c, d))
    noise = spec.within_spread * rng.standard_normal((c * r, d))
    vectors = (np.repeat(means, r, axis=0) + noise).astype(np.float32)
    labels = np.repeat(np.arange(c, dtype=np.int64), r)
    split = spec.num_base_classes * r
    return (
        FeatureSet(labels[:split], vectors[:split], "base"),
        FeatureSet(labels[split:], vectors[split:], "novel"),
    )
