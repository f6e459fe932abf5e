"""Deterministic fixture recipes shared by the tests and the oracle scripts.

Only numpy is used here so the oracles stay independent of the package.
"""

import numpy as np

# 4 classes x 8 bits, rows pairwise distinct, every column non-constant.
SEPARABLE_CODEBOOK = np.array(
    [
        [0, 1, 1, 0, 1, 0, 0, 1],
        [1, 1, 0, 0, 0, 1, 0, 1],
        [0, 0, 1, 1, 0, 1, 1, 0],
        [1, 0, 0, 1, 1, 0, 1, 0],
    ],
    dtype=np.float64,
)
SEPARABLE_EPOCHS = 500
SEPARABLE_SEED = 3


def separable_ecoc_data(seed=11, per_class=50, dim=8, spread=0.3):
    """Four classes around 2 * e_c in R^8: every bit split is linearly separable."""
    rng = np.random.default_rng(seed)
    means = np.zeros((4, dim))
    means[np.arange(4), np.arange(4)] = 2.0
    labels = np.repeat(np.arange(4), per_class)
    x = means[labels] + spread * rng.standard_normal((4 * per_class, dim))
    return labels, x.astype(np.float32)


def gradcheck_data(seed=5, n=12, dim=5, bits=4):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, dim))
    t = rng.integers(0, 2, size=(n, bits)).astype(np.float64)
    return x, t


def gradcheck_points(seed=6, count=20, dim=5, bits=4):
    rng = np.random.default_rng(seed)
    return [
        (rng.normal(0, 0.7, size=(dim, bits)), rng.normal(0, 0.7, size=bits))
        for _ in range(count)
    ]


def multiway_data(seed=2019, dim=32, base_classes=100, novel_classes=227,
                  base_per_class=20, offset=20.0,
                  class_spread=1.0, within_spread=1.0, scale_spread=0.15):
    """227-way variable-shot split with per-record norm jitter.

    Returns ``(base_labels, base_x, labels, x, roles)`` where ``roles[i]`` is
    "support" or "test". Each record is ``s * (offset * u + class + noise)``
    with ``log s ~ N(0, scale_spread^2)``; without the jitter UN and L2N
    rank neighbors almost identically.
    """
    rng = np.random.default_rng(seed)
    u = np.full(dim, 1.0 / np.sqrt(dim))

    def draw(n_classes, counts):
        means = offset * u + class_spread * rng.standard_normal((n_classes, dim))
        labels = np.repeat(np.arange(n_classes), counts)
        x = means[labels] + within_spread * rng.standard_normal((labels.size, dim))
        x *= np.exp(scale_spread * rng.standard_normal((labels.size, 1)))
        return labels, x.astype(np.float32)

    base_labels, base_x = draw(base_classes, base_per_class)
    shots = rng.integers(1, 11, size=novel_classes)
    tests = rng.integers(5, 16, size=novel_classes)
    labels, x = draw(novel_classes, shots + tests)
    roles = []
    for s, t in zip(shots, tests):
        roles += ["support"] * int(s) + ["test"] * int(t)
    return base_labels, base_x, labels + 1000, x, roles


PREDICT_WEIGHTS = np.array([[0.5, -1.0, 2.0], [1.5, 0.25, -0.75]])  # (D=2, B=3)
PREDICT_BIASES = np.array([0.1, -0.2, 0.3])
PREDICT_INPUT = np.array([0.8, -1.2])
