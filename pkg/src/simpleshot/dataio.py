"""Feature, split, codebook and model file formats.

Binary feature files (``.fsfv``) are little-endian::

    magic    4 bytes  b"FSFV"
    version  u16      1
    dim      u32      D >= 1
    count    u64      N
    N x (label u32, D x f32)
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .classifier import SupportSet
from .ecoc import Codebook, EcocModel
from .errors import (
    BadMagicError,
    BadVersionError,
    CodebookError,
    ConfigError,
    CsvFormatError,
    FeatureFileError,
    NonFiniteValueError,
    RaggedRowError,
    SplitError,
    TrailingDataError,
    TruncatedFileError,
)
from .features import FeatureSet
from .multiway import MultiwaySplit

PathLike = Union[str, os.PathLike]

MAGIC = b"FSFV"
VERSION = 1
HEADER = struct.Struct("<4sHIQ")
SPLIT_ROLES = ("support", "test")
MODEL_FORMAT = "simpleshot-ecoc-linear"


def _record_dtype(dimension: int) -> np.dtype:
    return np.dtype([("label", "<u4"), ("vector", "<f4", (dimension,))])


def encode_features(fs: FeatureSet) -> bytes:
    header = HEADER.pack(MAGIC, VERSION, fs.dimension, len(fs))
    body = np.empty(len(fs), dtype=_record_dtype(fs.dimension))
    body["label"] = fs.labels
    body["vector"] = fs.vectors
    return header + body.tobytes()


def decode_features(data: bytes, role=None) -> FeatureSet:
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < HEADER.size:
        raise TruncatedFileError("file ends inside the header", len(data))
    _, version, dimension, count = HEADER.unpack_from(data)
    if version != VERSION:
        raise BadVersionError(f"unsupported version {version}, expected {VERSION}")
    if dimension < 1:
        raise FeatureFileError("header dimension must be at least 1")
    dtype = _record_dtype(dimension)
    expected = HEADER.size + count * dtype.itemsize
    if len(data) < expected:
        complete = (len(data) - HEADER.size) // dtype.itemsize
        raise TruncatedFileError(
            f"header declares {count} records but only {complete} are complete",
            HEADER.size + complete * dtype.itemsize,
        )
    if len(data) > expected:
        raise TrailingDataError(
            f"{len(data) - expected} bytes after the last declared record", expected
        )
    body = np.frombuffer(data, dtype=dtype, count=count, offset=HEADER.size)
    vectors = body["vector"].astype(np.float32)
    bad = ~np.isfinite(vectors).all(axis=1)
    if bad.any():
        raise NonFiniteValueError(int(np.flatnonzero(bad)[0]))
    return FeatureSet(body["label"].astype(np.int64), vectors.reshape(count, dimension), role)


def write_features(fs: FeatureSet, path: PathLike):
    Path(path).write_bytes(encode_features(fs))


def read_features(path: PathLike, role=None) -> FeatureSet:
    return decode_features(Path(path).read_bytes(), role)


def _fmt(x) -> str:
    # repr of the exact double holding the float32 value; parses back exactly.
    return repr(float(x))


def write_csv_features(fs: FeatureSet, path: PathLike):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"f{i}" for i in range(fs.dimension)])
        for label, vec in zip(fs.labels.tolist(), fs.vectors):
            w.writerow([label] + [_fmt(v) for v in vec])


def parse_csv_features(text: str, role=None) -> FeatureSet:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None:
        raise CsvFormatError("missing header", 1)
    header = [h.strip() for h in header]
    if header[0] != "label" or len(header) < 2:
        raise CsvFormatError("header must be label,f0,...,f{D-1}", 1)
    expected = [f"f{i}" for i in range(len(header) - 1)]
    if header[1:] != expected:
        raise CsvFormatError("feature columns must be named f0, f1, ...", 1)
    dimension = len(header) - 1
    labels, vectors = [], []
    for lineno, row in enumerate(rows, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != dimension + 1:
            raise RaggedRowError(f"expected {dimension + 1} fields, found {len(row)}", lineno)
        try:
            label = int(row[0])
        except ValueError:
            raise CsvFormatError(f"bad label {row[0]!r}", lineno, 0) from None
        if not 0 <= label < 2**32:
            raise CsvFormatError(f"label {label} out of u32 range", lineno, 0)
        vec = []
        for col, field in enumerate(row[1:], start=1):
            try:
                v = float(field)
            except ValueError:
                raise CsvFormatError(f"bad number {field!r}", lineno, col) from None
            if not math.isfinite(v):
                raise NonFiniteValueError(len(labels))
            vec.append(v)
        labels.append(label)
        vectors.append(vec)
    if not labels:
        return FeatureSet.empty(dimension, role)
    with np.errstate(over="ignore"):
        vectors = np.asarray(vectors, dtype=np.float64).astype(np.float32)
    if not np.isfinite(vectors).all():
        # a finite double can still overflow float32
        raise NonFiniteValueError(int(np.flatnonzero(~np.isfinite(vectors).all(axis=1))[0]))
    return FeatureSet(labels, vectors, role)


def read_csv_features(path: PathLike, role=None) -> FeatureSet:
    with open(path, newline="") as fh:
        return parse_csv_features(fh.read(), role)


def feature_format(path: PathLike) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".fsfv":
        return "fsfv"
    raise ConfigError(f"cannot infer feature format from {str(path)!r} (use .csv or .fsfv)")


def load_features(path: PathLike, role=None) -> FeatureSet:
    """Read a feature file, choosing the format from its extension."""
    if feature_format(path) == "csv":
        return read_csv_features(path, role)
    return read_features(path, role)


def save_features(fs: FeatureSet, path: PathLike):
    if feature_format(path) == "csv":
        write_csv_features(fs, path)
    else:
        write_features(fs, path)


def _content_lines(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            yield lineno, stripped


def parse_multiway_split(text: str, features: FeatureSet) -> MultiwaySplit:
    roles = {}
    for lineno, line in _content_lines(text):
        parts = line.split("\t")
        if len(parts) != 2:
            parts = line.split()
        if len(parts) != 2:
            raise SplitError(f"line {lineno}: expected 'record_index<TAB>role'")
        raw_index, role = parts[0].strip(), parts[1].strip()
        try:
            index = int(raw_index)
        except ValueError:
            raise SplitError(f"line {lineno}: bad record index {raw_index!r}") from None
        if role not in SPLIT_ROLES:
            raise SplitError(f"line {lineno}: unknown role {role!r}")
        if not 0 <= index < len(features):
            raise SplitError(
                f"line {lineno}: record index {index} out of range "
                f"(feature set has {len(features)} records)"
            )
        if index in roles:
            raise SplitError(f"line {lineno}: record {index} listed twice")
        roles[index] = role
    support_idx = sorted(i for i, r in roles.items() if r == "support")
    test_idx = sorted(i for i, r in roles.items() if r == "test")
    if not support_idx:
        raise SplitError("split has no support records")
    support_labels = features.labels[support_idx]
    test_labels = features.labels[test_idx]
    missing = sorted(set(test_labels.tolist()) - set(support_labels.tolist()))
    if missing:
        raise SplitError(f"class {missing[0]} has test records but zero support")
    support = SupportSet.from_arrays(support_labels, features.vectors[support_idx])
    return MultiwaySplit(support, test_labels, features.vectors[test_idx])


def read_multiway_split(path: PathLike, features: FeatureSet) -> MultiwaySplit:
    return parse_multiway_split(Path(path).read_text(), features)


def format_multiway_split(support_indices, test_indices) -> str:
    lines = [f"{i}\tsupport" for i in support_indices]
    lines += [f"{i}\ttest" for i in test_indices]
    return "\n".join(lines) + "\n"


def format_codebook(codebook: Codebook) -> str:
    if not codebook.is_binary:
        raise CodebookError("only binary codebooks can be written as bitstrings")
    return "".join(
        f"{c}\t{''.join(str(int(b)) for b in row)}\n"
        for c, row in zip(codebook.class_ids, codebook.codes)
    )


def parse_codebook(text: str) -> Codebook:
    ids, rows = [], []
    for lineno, line in _content_lines(text):
        parts = line.split()
        if len(parts) != 2:
            raise CodebookError(f"line {lineno}: expected 'class_id<TAB>bitstring'")
        try:
            class_id = int(parts[0])
        except ValueError:
            raise CodebookError(f"line {lineno}: bad class id {parts[0]!r}") from None
        bits = parts[1]
        if set(bits) - {"0", "1"}:
            raise CodebookError(f"line {lineno}: bitstring may only contain 0 and 1")
        if rows and len(bits) != len(rows[0]):
            raise CodebookError(f"line {lineno}: bitstring length {len(bits)} != {len(rows[0])}")
        ids.append(class_id)
        rows.append([int(b) for b in bits])
    if not rows:
        raise CodebookError("codebook file has no rows")
    return Codebook(np.asarray(rows, dtype=np.float64), tuple(ids))


def write_codebook(codebook: Codebook, path: PathLike):
    Path(path).write_text(format_codebook(codebook))


def read_codebook(path: PathLike) -> Codebook:
    return parse_codebook(Path(path).read_text())


def model_to_json(model: EcocModel, loss_trace=None) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "version": 1,
        "dimension": model.dimension,
        "code_length": model.code_length,
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
    }
    if loss_trace is not None:
        doc["loss_trace"] = [float(v) for v in loss_trace]
    return json.dumps(doc, indent=1) + "\n"


def model_from_json(text: str) -> EcocModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FeatureFileError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise FeatureFileError(f"not a {MODEL_FORMAT} model file")
    weights = np.asarray(doc["weights"], dtype=np.float64)
    return EcocModel(weights.reshape(doc["dimension"], doc["code_length"]), doc["biases"])


def write_model(model: EcocModel, path: PathLike, loss_trace=None):
    Path(path).write_text(model_to_json(model, loss_trace))


def read_model(path: PathLike) -> EcocModel:
    return model_from_json(Path(path).read_text())
