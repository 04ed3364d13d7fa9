"""Feature-file ingestion, normalization, synthesis, and model persistence.

On-disk formats:

* Feature CSV: header ``id,grade,f0,...,f{D-1}``, UTF-8, decimal-point
  reals, no quoting. Grades are integers 0..4.
* Model archive: a single binary file: ``GPGMODEL`` magic, uint32
  format version, sha256 payload checksum, then a JSON header followed by
  raw little-endian float64 array buffers. Writes are deterministic for
  identical inputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gp
from .errors import InputError, ModelFormatError, ParseError
from .kernel import Hyperparams

STD_FLOOR = 1e-8

MODEL_MAGIC = b"GPGMODEL"
MODEL_FORMAT_VERSION = 1

# Tolerance when comparing recomputed factor/solve digests on load.
_DIGEST_RTOL = 1e-10


@dataclass(frozen=True)
class FeatureRecord:
    """One sample: identifier, D-dimensional feature vector, grade 0..4."""

    id: str
    features: np.ndarray
    grade: int


@dataclass(frozen=True)
class NormStats:
    """Per-feature z-score statistics, computed on the training split."""

    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class DatasetManifest:
    path: str
    n_records: int
    dimension: int
    grade_histogram: tuple[int, int, int, int, int]


def feature_matrix(records: list[FeatureRecord]) -> np.ndarray:
    """Stack record features into an (n, D) float64 matrix."""
    if not records:
        raise InputError("no records")
    return np.stack([r.features for r in records]).astype(np.float64)


def grades_vector(records: list[FeatureRecord]) -> np.ndarray:
    """Grades as a float vector, ready for regression targets."""
    return np.array([r.grade for r in records], dtype=np.float64)


def load_feature_csv(path) -> tuple[list[FeatureRecord], DatasetManifest]:
    """Parse a feature CSV in file order, validating every row.

    Raises ParseError (with the offending 1-based line number) on a
    malformed header, inconsistent row width, non-integer or out-of-range
    grade, or non-finite feature value.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    records: list[FeatureRecord] = []
    histogram = [0, 0, 0, 0, 0]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file: missing header", line=1) from None
        if len(header) < 3 or header[0] != "id" or header[1] != "grade":
            raise ParseError(
                "malformed header: expected 'id,grade,f0,...'", line=1
            )
        dim = len(header) - 2
        expected_names = [f"f{i}" for i in range(dim)]
        if header[2:] != expected_names:
            raise ParseError(
                "malformed header: feature columns must be named f0..f{D-1}",
                line=1,
            )
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 2:
                raise ParseError(
                    f"expected {dim + 2} fields, got {len(row)}", line=lineno
                )
            try:
                grade = int(row[1])
            except ValueError:
                raise ParseError(
                    f"non-integer grade {row[1]!r}", line=lineno
                ) from None
            if grade < 0 or grade > 4:
                raise ParseError(f"grade {grade} out of range 0..4", line=lineno)
            try:
                features = np.asarray(row[2:], dtype=np.float64)
            except ValueError:
                raise ParseError("non-numeric feature value", line=lineno) from None
            if not np.isfinite(features).all():
                raise ParseError("non-finite feature value", line=lineno)
            histogram[grade] += 1
            records.append(FeatureRecord(id=row[0], features=features, grade=grade))
    if not records:
        raise ParseError("no records")
    manifest = DatasetManifest(
        path=str(path),
        n_records=len(records),
        dimension=dim,
        grade_histogram=tuple(histogram),
    )
    return records, manifest


def write_feature_csv(records: list[FeatureRecord], path) -> None:
    """Write records in the feature CSV format (atomic, deterministic)."""
    if not records:
        raise InputError("no records to write")
    dim = records[0].features.shape[0]
    header = "id,grade," + ",".join(f"f{i}" for i in range(dim))

    def emit(fh):
        fh.write(header + "\n")
        for r in records:
            if r.features.shape[0] != dim:
                raise InputError(f"record {r.id!r} has inconsistent dimension")
            values = ",".join(repr(float(v)) for v in r.features)
            fh.write(f"{r.id},{r.grade},{values}\n")

    _atomic_write_text(Path(path), emit)


def fit_normalizer(train: list[FeatureRecord]) -> NormStats:
    """Per-feature mean/std from the training split; std floored at 1e-8."""
    X = feature_matrix(train)
    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), STD_FLOOR)
    return NormStats(mean=mean, std=std)


def apply_normalizer(stats: NormStats, records) -> np.ndarray:
    """Z-score a record list (or raw matrix) with frozen training statistics."""
    if isinstance(records, np.ndarray):
        X = np.asarray(records, dtype=np.float64)
    else:
        X = feature_matrix(records)
    if X.shape[1] != stats.mean.shape[0]:
        raise InputError(
            f"feature dimension {X.shape[1]} does not match normalizer "
            f"dimension {stats.mean.shape[0]}"
        )
    return (X - stats.mean) / stats.std


def synthesize_dataset(
    n_per_grade,
    D: int,
    separation: float,
    noise: float,
    seed: int,
) -> list[FeatureRecord]:
    """Seeded synthetic stand-in for extracted image features.

    Grade ``g`` samples are drawn from an isotropic Gaussian centred at
    ``g * separation * u`` for a fixed unit direction ``u`` derived from
    the seed, so the grades embed on a one-dimensional manifold and the
    regress-then-threshold pipeline is learnable.
    """
    n_per_grade = list(n_per_grade)
    if len(n_per_grade) != 5 or any(int(n) != n or n < 0 for n in n_per_grade):
        raise InputError("n_per_grade must be five non-negative integers")
    if D < 2:
        raise InputError("D must be at least 2")
    if separation <= 0 or noise <= 0:
        raise InputError("separation and noise must be positive")
    rng = np.random.default_rng(seed)
    u = rng.normal(size=D)
    u /= np.linalg.norm(u)
    total = int(sum(n_per_grade))
    eps = rng.normal(size=(total, D))
    records = []
    idx = 0
    for grade, count in enumerate(n_per_grade):
        center = grade * separation * u
        for _ in range(int(count)):
            features = center + noise * eps[idx]
            records.append(
                FeatureRecord(id=f"synth-{idx:05d}", features=features, grade=grade)
            )
            idx += 1
    return records


# ---------------------------------------------------------------------------
# model persistence


def _atomic_write_text(path: Path, emit) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            emit(fh)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _atomic_write_bytes(path: Path, blob: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _model_digests(model: gp.GPModel) -> dict:
    return {
        "chol_l_fro": float(np.linalg.norm(model.chol_L, "fro")),
        "alpha_l2": float(np.linalg.norm(model.alpha)),
    }


def save_model(model: gp.GPModel, path) -> None:
    """Serialize a trained model to a versioned, checksummed archive.

    The Cholesky factor and solve vector are not stored; numeric digests
    of both are, so the load path can verify its recomputation.
    """
    arrays = [("X_train", model.X_train), ("y_train", model.y_train)]
    if model.normalizer is not None:
        arrays.append(("norm_mean", model.normalizer.mean))
        arrays.append(("norm_std", model.normalizer.std))
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "log_length_scale": model.hp.log_length_scale,
        "log_signal_variance": model.hp.log_signal_variance,
        "log_noise_variance": model.hp.log_noise_variance,
        "train_subset_seed": int(model.train_subset_seed),
        "has_normalizer": model.normalizer is not None,
        "digests": _model_digests(model),
        "arrays": [
            {"name": name, "shape": list(arr.shape)} for name, arr in arrays
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )
    buffers = b"".join(
        np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in arrays
    )
    payload = struct.pack("<Q", len(header_bytes)) + header_bytes + buffers
    blob = (
        MODEL_MAGIC
        + struct.pack("<I", MODEL_FORMAT_VERSION)
        + hashlib.sha256(payload).digest()
        + struct.pack("<Q", len(payload))
        + payload
    )
    _atomic_write_bytes(Path(path), blob)


def load_model(path) -> gp.GPModel:
    """Load a model archive; recompute and verify the factorized system.

    Raises ModelFormatError on a bad magic string, unknown format
    version, checksum mismatch, truncation, or when the recomputed
    factor/solve digests deviate from the saved ones.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    blob = path.read_bytes()
    offset = len(MODEL_MAGIC)
    if blob[:offset] != MODEL_MAGIC:
        raise ModelFormatError(f"{path} is not a model archive")
    if len(blob) < offset + 4 + 32 + 8:
        raise ModelFormatError("truncated archive: header incomplete")
    (version,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    checksum = blob[offset : offset + 32]
    offset += 32
    (payload_len,) = struct.unpack_from("<Q", blob, offset)
    offset += 8
    payload = blob[offset : offset + payload_len]
    if len(payload) != payload_len:
        raise ModelFormatError("truncated archive: payload incomplete")
    if hashlib.sha256(payload).digest() != checksum:
        raise ModelFormatError("checksum mismatch: archive payload is corrupt")

    (header_len,) = struct.unpack_from("<Q", payload, 0)
    try:
        header = json.loads(payload[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable archive header: {exc}") from None

    cursor = 8 + header_len
    loaded = {}
    for spec in header["arrays"]:
        shape = tuple(int(s) for s in spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        raw = payload[cursor : cursor + nbytes]
        if len(raw) != nbytes:
            raise ModelFormatError("truncated archive: array data incomplete")
        loaded[spec["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        cursor += nbytes

    hp = Hyperparams(
        header["log_length_scale"],
        header["log_signal_variance"],
        header["log_noise_variance"],
    )
    normalizer = None
    if header["has_normalizer"]:
        normalizer = NormStats(mean=loaded["norm_mean"], std=loaded["norm_std"])
    model = gp.build_model(
        loaded["X_train"],
        loaded["y_train"],
        hp,
        normalizer=normalizer,
        train_subset_seed=int(header["train_subset_seed"]),
    )
    recomputed = _model_digests(model)
    for key, saved in header["digests"].items():
        got = recomputed[key]
        if not math.isclose(got, saved, rel_tol=_DIGEST_RTOL, abs_tol=_DIGEST_RTOL):
            raise ModelFormatError(
                f"digest {key} mismatch after recomputation: "
                f"saved {saved!r}, got {got!r}"
            )
    return model
