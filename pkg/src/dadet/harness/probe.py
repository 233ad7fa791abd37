"""Domain-confusion probe: how separable do source and target remain?

A fresh logistic-regression classifier is fitted on mean-pooled frozen
features per scale (or raw pixels) from held-out balanced source/target
sets; held-out accuracy near 0.5 means the domains are indistinguishable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import train_test_split

from dadet.data.dataset import load_split
from dadet.harness.training import batch_to_tensor, load_detector_from_checkpoint


@dataclass
class ProbeResult:
    accuracies: dict[str, float]  # per scale (and optionally "pixels")
    counts: dict[str, int]  # samples used per domain after balancing

    @property
    def mean_feature_accuracy(self) -> float:
        feats = [v for k, v in self.accuracies.items() if k != "pixels"]
        return float(np.mean(feats))


def _fit_probe(features: np.ndarray, labels: np.ndarray, seed: int) -> float:
    x_tr, x_te, y_tr, y_te = train_test_split(
        features, labels, test_size=0.3, random_state=seed, stratify=labels
    )
    clf = LogisticRegression(max_iter=2000)
    clf.fit(x_tr, y_tr)
    return float(clf.score(x_te, y_te))


def _mean_pool(images: np.ndarray) -> np.ndarray:
    return images.astype(np.float32).mean(axis=(1, 2)) / 255.0


def pixel_probe_accuracy(source_images: np.ndarray, target_images: np.ndarray, seed: int = 0) -> float:
    """Raw-pixel separability of the two domains (sanity bound for the gap)."""
    features = np.concatenate([_mean_pool(source_images), _mean_pool(target_images)])
    labels = np.concatenate([np.ones(len(source_images)), np.zeros(len(target_images))])
    return _fit_probe(features, labels, seed)


def domain_confusion_probe(
    checkpoint_path: str | Path,
    data_dir: str | Path,
    seed: int = 0,
    include_pixels: bool = False,
    source_split: str = "source_val",
    target_split: str = "target_val",
) -> ProbeResult:
    model, _config = load_detector_from_checkpoint(checkpoint_path)
    source = load_split(data_dir, source_split)
    target = load_split(data_dir, target_split)

    # rebalance by subsampling the larger side; counts are reported
    n = min(len(source), len(target))
    rng = np.random.default_rng(seed)
    s_idx = rng.choice(len(source), n, replace=False) if len(source) > n else np.arange(n)
    t_idx = rng.choice(len(target), n, replace=False) if len(target) > n else np.arange(n)
    s_images = source.images[s_idx]
    t_images = target.images[t_idx]
    labels = np.concatenate([np.ones(n), np.zeros(n)])

    pooled: dict[str, list[np.ndarray]] = {"f1": [], "f2": [], "f3": []}
    with torch.no_grad():
        for images in (s_images, t_images):
            for start in range(0, n, 64):
                block = images[start : start + 64].astype(np.float32) / 255.0
                pyramid = model.extract_features(batch_to_tensor(block))
                for name, feat in zip(("f1", "f2", "f3"), pyramid):
                    pooled[name].append(feat.mean(dim=(2, 3)).numpy())

    accuracies = {name: _fit_probe(np.concatenate(mats), labels, seed) for name, mats in pooled.items()}
    if include_pixels:
        accuracies["pixels"] = pixel_probe_accuracy(s_images, t_images, seed)
    return ProbeResult(accuracies=accuracies, counts={"source": n, "target": n})
