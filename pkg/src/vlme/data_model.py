"""Tensor file format, dataset manifests, and load-time validation.

Tensor files use the "VET1" layout: 4-byte ASCII magic, one dtype code byte
(0x01 = float32 little-endian), one ndim byte (1..4), two zero padding bytes,
ndim u64 little-endian dims, then the row-major float32 payload.

Manifests are UTF-8 JSON. File references are resolved relative to the
manifest's directory. A manifest may mix probability-based and feature-based
model sources.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TensorFormatError, ValidationError

MAGIC = b"VET1"
DTYPE_F32 = 0x01
MAX_NDIM = 4

ROW_SUM_TOL = 1e-4


def write_tensor(path, shape, data) -> None:
    """Write a float32 tensor to `path` in the VET1 format."""
    shape = [int(s) for s in shape]
    if not 1 <= len(shape) <= MAX_NDIM:
        raise ValidationError(f"ndim must be 1..{MAX_NDIM}, got {len(shape)}")
    if any(s <= 0 for s in shape):
        raise ValidationError(f"empty tensor not allowed, shape {shape}")
    arr = np.asarray(data, dtype=np.float32).reshape(-1)
    n = int(np.prod(shape))
    if arr.size != n:
        raise ValidationError(f"shape {shape} requires {n} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("non-finite data rejected")
    header = MAGIC + struct.pack("<BBxx", DTYPE_F32, len(shape))
    dims = struct.pack(f"<{len(shape)}Q", *shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(dims)
        fh.write(arr.astype("<f4").tobytes())


def read_tensor(path):
    """Read a VET1 tensor; returns (shape, float32 ndarray). Exact inverse of write_tensor."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise TensorFormatError(f"bad magic in {path}")
    dtype_code, ndim = raw[4], raw[5]
    if dtype_code != DTYPE_F32:
        raise TensorFormatError(f"unsupported dtype code 0x{dtype_code:02x} in {path}")
    if not 1 <= ndim <= MAX_NDIM:
        raise TensorFormatError(f"unsupported ndim {ndim} in {path}")
    dims_end = 8 + 8 * ndim
    if len(raw) < dims_end:
        raise TensorFormatError(f"truncated payload in {path} (header cut short)")
    shape = list(struct.unpack(f"<{ndim}Q", raw[8:dims_end]))
    n = int(np.prod(shape))
    payload = raw[dims_end:]
    if len(payload) < 4 * n:
        raise TensorFormatError(f"truncated payload in {path} (expected {4 * n} bytes, got {len(payload)})")
    data = np.frombuffer(payload[: 4 * n], dtype="<f4").reshape(shape)
    return shape, data


@dataclass(frozen=True)
class ModelEntry:
    """One ensemble member as declared in a manifest."""

    name: str
    feature_dim: int
    probs_file: str | None = None
    features_file: str | None = None
    class_embeddings_file: str | None = None
    temperature: float | None = None

    @property
    def is_feature_source(self) -> bool:
        return self.features_file is not None


@dataclass(frozen=True)
class LoadedModel:
    """A validated model: probabilities always present, features when exported."""

    entry: ModelEntry
    probs: np.ndarray  # (N, K) float64, rows renormalized to sum exactly 1
    features: np.ndarray | None = None  # (N, d) float64
    class_embeddings: np.ndarray | None = None  # (K, d) float64


@dataclass(frozen=True)
class DatasetManifest:
    """Fully loaded and validated dataset: immutable, safe to share."""

    dataset_name: str
    num_classes: int
    class_names: list[str]
    labels: np.ndarray  # (N,) int64
    models: list[LoadedModel]
    anchor_index: int
    path: str = ""

    @property
    def num_samples(self) -> int:
        return int(self.labels.shape[0])

    def prob_list(self) -> list[np.ndarray]:
        return [m.probs for m in self.models]


def _validate_probs(arr: np.ndarray, name: str, n_expected, k: int) -> np.ndarray:
    probs = np.asarray(arr, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] != k:
        raise ValidationError(f"{name}: probs shape {probs.shape} does not match K={k}")
    if n_expected is not None and probs.shape[0] != n_expected:
        raise ValidationError(f"{name}: probs N={probs.shape[0]} does not match N={n_expected}")
    if probs.shape[0] < 1 or k < 2:
        raise ValidationError(f"{name}: need N >= 1 and K >= 2, got {probs.shape}")
    if not np.all(np.isfinite(probs)):
        raise ValidationError(f"{name}: non-finite probabilities")
    if np.any(probs < 0) or np.any(probs > 1):
        raise ValidationError(f"{name}: probabilities outside [0, 1]")
    sums = probs.sum(axis=1)
    bad = np.abs(sums - 1.0) > ROW_SUM_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValidationError(f"{name}: row {i} sums to {sums[i]:.6f}, outside 1 +/- {ROW_SUM_TOL}")
    # exporter round-off must not leak downstream
    return probs / sums[:, None]


def _load_model(spec: dict, base: Path, n_expected, k: int) -> tuple[LoadedModel, int]:
    from . import scoring  # local import: scoring depends on this module's types only at runtime

    name = spec.get("name")
    if not name:
        raise ValidationError("model entry missing 'name'")
    feature_dim = int(spec.get("feature_dim", 0))
    has_probs = "probs_file" in spec
    has_feats = "features_file" in spec
    if has_probs == has_feats:
        raise ValidationError(f"model {name}: exactly one of probs_file or features_file required")

    if has_probs:
        entry = ModelEntry(name=name, feature_dim=feature_dim, probs_file=spec["probs_file"])
        _, raw = read_tensor(base / entry.probs_file)
        probs = _validate_probs(raw, name, n_expected, k)
        return LoadedModel(entry=entry, probs=probs), probs.shape[0]

    if "class_embeddings_file" not in spec or "temperature" not in spec:
        raise ValidationError(f"model {name}: feature source needs class_embeddings_file and temperature")
    tau = float(spec["temperature"])
    if tau <= 0:
        raise ValidationError(f"model {name}: temperature must be > 0, got {tau}")
    entry = ModelEntry(
        name=name,
        feature_dim=feature_dim,
        features_file=spec["features_file"],
        class_embeddings_file=spec["class_embeddings_file"],
        temperature=tau,
    )
    fshape, feats = read_tensor(base / entry.features_file)
    eshape, emb = read_tensor(base / entry.class_embeddings_file)
    feats = np.asarray(feats, dtype=np.float64)
    emb = np.asarray(emb, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != feature_dim:
        raise ValidationError(f"model {name}: features shape {fshape} vs feature_dim {feature_dim}")
    if n_expected is not None and feats.shape[0] != n_expected:
        raise ValidationError(f"model {name}: features N={feats.shape[0]} does not match N={n_expected}")
    if emb.ndim != 2 or emb.shape != (k, feature_dim):
        raise ValidationError(f"model {name}: class embeddings shape {eshape}, expected ({k}, {feature_dim})")
    if not np.all(np.isfinite(feats)) or not np.all(np.isfinite(emb)):
        raise ValidationError(f"model {name}: non-finite features or embeddings")
    probs = scoring.probs_from_features(feats, emb, tau)
    return LoadedModel(entry=entry, probs=probs, features=feats, class_embeddings=emb), feats.shape[0]


def load_manifest(path) -> DatasetManifest:
    """Load and fully validate a dataset manifest; never returns a partial object."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"manifest {path}: invalid JSON ({e})") from e
    base = path.parent

    for key in ("dataset_name", "num_classes", "class_names", "labels_file", "anchor_index", "models"):
        if key not in doc:
            raise ValidationError(f"manifest {path}: missing key '{key}'")
    k = int(doc["num_classes"])
    if k < 2:
        raise ValidationError(f"manifest {path}: num_classes must be >= 2")
    class_names = list(doc["class_names"])
    if len(class_names) != k:
        raise ValidationError(f"manifest {path}: {len(class_names)} class names for K={k}")

    _, labels_raw = read_tensor(base / doc["labels_file"])
    labels_f = np.asarray(labels_raw, dtype=np.float64).reshape(-1)
    labels = labels_f.astype(np.int64)
    if np.any(labels_f != labels):
        raise ValidationError(f"manifest {path}: labels file contains non-integer values")
    if labels.size < 1:
        raise ValidationError(f"manifest {path}: empty label vector")
    if np.any(labels < 0) or np.any(labels >= k):
        bad = int(labels[(labels < 0) | (labels >= k)][0])
        raise ValidationError(f"manifest {path}: label {bad} out of range [0, {k})")

    model_specs = doc["models"]
    if not model_specs:
        raise ValidationError(f"manifest {path}: no models")
    n = int(labels.size)
    models = []
    for spec in model_specs:
        model, n_model = _load_model(spec, base, n, k)
        models.append(model)

    anchor_index = int(doc["anchor_index"])
    if not 0 <= anchor_index < len(models):
        raise ValidationError(f"manifest {path}: anchor_index {anchor_index} out of range")

    return DatasetManifest(
        dataset_name=str(doc["dataset_name"]),
        num_classes=k,
        class_names=class_names,
        labels=labels,
        models=models,
        anchor_index=anchor_index,
        path=str(path),
    )


def subset_manifest(ds: DatasetManifest, indices) -> DatasetManifest:
    """Row-subset view of a loaded dataset (same class space, fewer samples)."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValidationError("empty subset")
    models = [
        LoadedModel(
            entry=m.entry,
            probs=m.probs[idx],
            features=None if m.features is None else m.features[idx],
            class_embeddings=m.class_embeddings,
        )
        for m in ds.models
    ]
    return DatasetManifest(
        dataset_name=ds.dataset_name,
        num_classes=ds.num_classes,
        class_names=ds.class_names,
        labels=ds.labels[idx],
        models=models,
        anchor_index=ds.anchor_index,
        path=ds.path,
    )
