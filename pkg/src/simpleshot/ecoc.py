"""Error-correcting output codes with a linear multi-bit predictor.

Classes are encoded as rows of a C x B codebook. A model maps a feature
vector to B bit probabilities, and the predicted class is the codebook row
closest in L1 distance (Hamming distance when the prediction is binary).
A new class can be registered without retraining by appending the mean
prediction over its K shots as a soft row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CodebookError,
    CodeTooShortError,
    DimensionMismatchError,
    DuplicateClassError,
    EmptySetError,
    NonFiniteLossError,
    UnknownLabelError,
)
from .features import FeatureSet

MAX_ROW_RESAMPLES = 1000
INIT_SCALE = 0.01


def min_code_length(num_classes: int) -> int:
    """ceil(log2(C)), computed exactly."""
    if num_classes < 1:
        raise ValueError("need at least one class")
    return (num_classes - 1).bit_length()


def _check_code_length(num_classes: int, bits: int):
    need = max(1, min_code_length(num_classes))
    if bits < need:
        raise CodeTooShortError(
            f"{num_classes} classes need at least ceil(log2({num_classes})) = "
            f"{need} bits, got {bits}"
        )


@dataclass(frozen=True, eq=False)
class Codebook:
    """Class codes as a float ``(C, B)`` matrix.

    Rows produced by :func:`random_codebook` are binary; rows added by
    :func:`extend_codebook` may hold soft values in [0, 1].
    """

    codes: np.ndarray
    class_ids: tuple

    def __post_init__(self):
        codes = np.array(self.codes, dtype=np.float64)
        if codes.ndim != 2 or codes.shape[0] < 1:
            raise CodebookError("codes must be a non-empty (C, B) matrix")
        ids = tuple(int(c) for c in self.class_ids)
        if len(ids) != codes.shape[0]:
            raise CodebookError(f"{len(ids)} class ids for {codes.shape[0]} code rows")
        if len(set(ids)) != len(ids):
            raise DuplicateClassError("class ids in a codebook must be distinct")
        if not np.isfinite(codes).all() or codes.min() < 0 or codes.max() > 1:
            raise CodebookError("code values must lie in [0, 1]")
        _check_code_length(codes.shape[0], codes.shape[1])
        if len(np.unique(codes, axis=0)) != codes.shape[0]:
            raise CodebookError("codebook rows must be pairwise distinct")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "class_ids", ids)

    @property
    def num_classes(self) -> int:
        return self.codes.shape[0]

    @property
    def code_length(self) -> int:
        return self.codes.shape[1]

    @property
    def is_binary(self) -> bool:
        return bool(np.isin(self.codes, (0.0, 1.0)).all())

    def row(self, class_id: int) -> np.ndarray:
        try:
            return self.codes[self.class_ids.index(int(class_id))]
        except ValueError:
            raise UnknownLabelError(f"class {class_id} is not in the codebook") from None


def random_codebook(num_classes: int, code_length: int, seed: int,
                    class_ids: Optional[Sequence[int]] = None) -> Codebook:
    """Uniform random bits; a row equal to an earlier one is redrawn."""
    _check_code_length(num_classes, code_length)
    if class_ids is None:
        class_ids = range(num_classes)
    rng = np.random.Generator(np.random.PCG64(seed))
    codes = rng.integers(0, 2, size=(num_classes, code_length), dtype=np.uint8)
    for i in range(1, num_classes):
        attempts = 0
        while (codes[:i] == codes[i]).all(axis=1).any():
            if attempts == MAX_ROW_RESAMPLES:
                raise CodebookError(
                    f"row {i} still collides after {MAX_ROW_RESAMPLES} redraws"
                )
            codes[i] = rng.integers(0, 2, size=code_length, dtype=np.uint8)
            attempts += 1
    return Codebook(codes, tuple(class_ids))


def hamming_distances(codebook: Codebook) -> np.ndarray:
    c = codebook.codes
    return np.abs(c[:, None, :] - c[None, :, :]).sum(axis=2)


def min_distance(codebook: Codebook) -> float:
    """Smallest pairwise L1 (Hamming, for binary books) distance between rows."""
    d = hamming_distances(codebook)
    if d.shape[0] < 2:
        return float("inf")
    return float(d[~np.eye(d.shape[0], dtype=bool)].min())


def _as_code(codebook: Codebook, predicted) -> np.ndarray:
    p = np.asarray(predicted, dtype=np.float64)
    if p.shape[-1:] != (codebook.code_length,):
        raise DimensionMismatchError(
            f"predicted code has length {p.shape[-1] if p.ndim else 0}, "
            f"codebook uses {codebook.code_length} bits"
        )
    return p


def decode(codebook: Codebook, predicted) -> int:
    """Class whose row is nearest in L1 distance; ties go to the first row."""
    p = _as_code(codebook, predicted)
    if p.ndim != 1:
        raise DimensionMismatchError("decode expects a single code; use decode_batch")
    dist = np.abs(codebook.codes - p).sum(axis=1)
    return codebook.class_ids[int(np.argmin(dist))]


def decode_batch(codebook: Codebook, predicted) -> np.ndarray:
    p = np.atleast_2d(_as_code(codebook, predicted))
    dist = np.abs(p[:, None, :] - codebook.codes[None, :, :]).sum(axis=2)
    return np.asarray(codebook.class_ids, dtype=np.int64)[np.argmin(dist, axis=1)]


def decode_cosine(codebook: Codebook, predicted) -> int:
    """Alternative decoder: map {0,1} to {-1,+1} and take the most
    cosine-similar row. Agrees with :func:`decode` for binary predictions."""
    p = 2.0 * _as_code(codebook, predicted) - 1.0
    rows = 2.0 * codebook.codes - 1.0
    norms = np.linalg.norm(rows, axis=1) * np.linalg.norm(p)
    dots = rows @ p
    sims = np.divide(dots, norms, out=np.zeros_like(dots), where=norms > 0)
    return codebook.class_ids[int(np.argmax(sims))]


def threshold_code(code, at: float = 0.5) -> np.ndarray:
    return (np.asarray(code) >= at).astype(np.uint8)


def extend_codebook(codebook: Codebook, new_class: int, code) -> Codebook:
    if int(new_class) in codebook.class_ids:
        raise DuplicateClassError(f"class {new_class} is already in the codebook")
    row = _as_code(codebook, code)
    return Codebook(
        np.vstack([codebook.codes, row[None, :]]),
        codebook.class_ids + (int(new_class),),
    )


def sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -np.asarray(z, dtype=np.float64)))


@dataclass(frozen=True, eq=False)
class EcocModel:
    weights: np.ndarray  # (D, B)
    biases: np.ndarray  # (B,)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        b = np.array(self.biases, dtype=np.float64).reshape(-1)
        if w.ndim != 2 or w.shape[1] != b.shape[0]:
            raise DimensionMismatchError(
                f"weights {w.shape} and biases {b.shape} are inconsistent"
            )
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("model parameters must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    @property
    def code_length(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def zeros(cls, dimension: int, code_length: int) -> "EcocModel":
        return cls(np.zeros((dimension, code_length)), np.zeros(code_length))


def _inputs(model: EcocModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (model.dimension,):
        raise DimensionMismatchError(
            f"input dimension {x.shape[-1] if x.ndim else 0} != model dimension {model.dimension}"
        )
    return x


def predict_code(model: EcocModel, x) -> np.ndarray:
    """Bit probabilities ``sigmoid(W^T x + b)`` for one vector or a batch."""
    x = _inputs(model, x)
    return sigmoid(x @ model.weights + model.biases)


def soft_code(model: EcocModel, shots) -> np.ndarray:
    """Mean bit probabilities over K shots of a class."""
    shots = np.asarray(shots, dtype=np.float64)
    if shots.size == 0:
        raise EmptySetError("soft code needs at least one shot")
    return predict_code(model, np.atleast_2d(shots)).mean(axis=0)


def bce_loss_and_grad(weights, biases, inputs, targets):
    """Summed binary cross-entropy over all examples and bits, and its
    gradient with respect to ``(weights, biases)``."""
    logits = inputs @ weights + biases
    # log(1 + e^z) - t z is BCE(sigmoid(z), t) without forming log(sigmoid).
    loss = float(np.sum(np.logaddexp(0.0, logits) - targets * logits))
    resid = sigmoid(logits) - targets
    return loss, inputs.T @ resid, resid.sum(axis=0)


def code_targets(labels, codebook: Codebook) -> np.ndarray:
    index = {c: i for i, c in enumerate(codebook.class_ids)}
    rows = []
    for label in np.asarray(labels).tolist():
        if label not in index:
            raise UnknownLabelError(f"training label {label} is not in the codebook")
        rows.append(index[label])
    return codebook.codes[np.asarray(rows, dtype=np.int64)]


def train_linear_ecoc(train: FeatureSet, codebook: Codebook, learning_rate: float,
                      epochs: int, seed: int) -> tuple[EcocModel, np.ndarray]:
    """Full-batch gradient descent on the summed BCE loss.

    Returns the trained model and the loss after each epoch's update.
    """
    if not learning_rate > 0:
        raise ValueError(f"learning rate must be positive, got {learning_rate}")
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if len(train) == 0:
        raise EmptySetError("training set is empty")
    targets = code_targets(train.labels, codebook)
    x = train.vectors.astype(np.float64)
    rng = np.random.Generator(np.random.PCG64(seed))
    w = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(train.dimension, codebook.code_length))
    b = np.zeros(codebook.code_length)

    trace = np.empty(epochs)
    _, gw, gb = bce_loss_and_grad(w, b, x, targets)
    # divergence is reported through the loss check, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(epochs):
            w = w - learning_rate * gw
            b = b - learning_rate * gb
            loss, gw, gb = bce_loss_and_grad(w, b, x, targets)
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"loss became {loss} at epoch {epoch}")
            trace[epoch] = loss
    return EcocModel(w, b), trace
