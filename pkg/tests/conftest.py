import json
from pathlib import Path

import numpy as np
import pytest

from vlme.data_model import write_tensor


def random_probs(rng, n, k):
    """Random row-stochastic matrix."""
    raw = rng.random((n, k)) + 1e-3
    return raw / raw.sum(axis=1, keepdims=True)


def write_probs_manifest(directory, prob_list, labels, anchor_index=None,
                         dataset_name="synthetic", class_names=None):
    """Write probability matrices + labels as a loadable manifest; returns its path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    labels = np.asarray(labels)
    k = prob_list[0].shape[1]
    write_tensor(directory / "labels.vet", [labels.size], labels.astype(np.float32))
    models = []
    for i, p in enumerate(prob_list):
        fn = f"model{i}_probs.vet"
        write_tensor(directory / fn, p.shape, p.astype(np.float32))
        models.append({"name": f"model{i}", "feature_dim": 0, "probs_file": fn})
    doc = {
        "dataset_name": dataset_name,
        "num_classes": k,
        "class_names": class_names or [f"class{j}" for j in range(k)],
        "labels_file": "labels.vet",
        "anchor_index": len(prob_list) - 1 if anchor_index is None else anchor_index,
        "models": models,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


def write_feature_manifest(directory, features_list, class_emb_list, temps, labels,
                           anchor_index=None, dataset_name="synthetic"):
    """Write feature-source models as a loadable manifest; returns its path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    labels = np.asarray(labels)
    k = class_emb_list[0].shape[0]
    write_tensor(directory / "labels.vet", [labels.size], labels.astype(np.float32))
    models = []
    for i, (f, c, t) in enumerate(zip(features_list, class_emb_list, temps)):
        ffn, cfn = f"model{i}_features.vet", f"model{i}_classemb.vet"
        write_tensor(directory / ffn, f.shape, f.astype(np.float32))
        write_tensor(directory / cfn, c.shape, c.astype(np.float32))
        models.append({
            "name": f"model{i}", "feature_dim": f.shape[1],
            "features_file": ffn, "class_embeddings_file": cfn, "temperature": t,
        })
    doc = {
        "dataset_name": dataset_name,
        "num_classes": k,
        "class_names": [f"class{j}" for j in range(k)],
        "labels_file": "labels.vet",
        "anchor_index": len(models) - 1 if anchor_index is None else anchor_index,
        "models": models,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


def separable_gating_fixture(seed=11, n=1024, k=8, n_models=4, feat_dim=128):
    """Dataset where exactly one model is correct per sample region.

    Region r = sample index mod n_models decides the reliable model; features
    of every model carry a strong region signature, so a weight vector
    one-hot on the reliable model classifies perfectly.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    labels = rng.integers(0, k, size=n)
    regions = np.arange(n) % n_models
    prob_list = []
    for j in range(n_models):
        p = np.full((n, k), 0.02 / (k - 1))
        for s in range(n):
            if regions[s] == j:
                p[s] = 0.02 / (k - 1)
                p[s, labels[s]] = 0.98
            else:
                wrong = (labels[s] + 1 + j) % k
                p[s] = 0.02 / (k - 1)
                p[s, wrong] = 0.98
        p /= p.sum(axis=1, keepdims=True)
        prob_list.append(p)
    features_list = []
    for j in range(n_models):
        f = rng.normal(0, 0.1, size=(n, feat_dim))
        f[np.arange(n), regions] += 6.0  # region signature in the first n_models dims
        features_list.append(f)
    return labels, regions, prob_list, features_list


def in_memory_dataset(prob_list, labels, features_list=None, anchor_index=None,
                      dataset_name="synthetic"):
    """Build a DatasetManifest directly from arrays (no files)."""
    from vlme.data_model import DatasetManifest, LoadedModel, ModelEntry

    labels = np.asarray(labels, dtype=np.int64)
    k = prob_list[0].shape[1]
    models = []
    for i, p in enumerate(prob_list):
        feats = None if features_list is None else np.asarray(features_list[i], dtype=np.float64)
        entry = ModelEntry(name=f"model{i}",
                           feature_dim=0 if feats is None else feats.shape[1],
                           probs_file=f"model{i}_probs.vet")
        models.append(LoadedModel(entry=entry, probs=np.asarray(p, dtype=np.float64),
                                  features=feats))
    return DatasetManifest(
        dataset_name=dataset_name,
        num_classes=k,
        class_names=[f"class{j}" for j in range(k)],
        labels=labels,
        models=models,
        anchor_index=len(models) - 1 if anchor_index is None else anchor_index,
    )


def separable_dataset(seed=11, n=1024, k=8, n_models=4, feat_dim=128):
    labels, _, prob_list, features_list = separable_gating_fixture(seed, n, k, n_models, feat_dim)
    return in_memory_dataset(prob_list, labels, features_list, dataset_name="separable")
