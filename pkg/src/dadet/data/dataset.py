"""Dataset generation, manifest I/O, and split loading.

A dataset directory holds one subdirectory per split (PNG images with
label sidecars) plus a manifest recording the generator version, seed,
config, and split membership. Target training scenes are fog-corrupted
variants of the same underlying scenes as the source training split;
validation splits use held-out scene seeds and keep their labels (target
labels are used only for evaluation and the oracle run).
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np
from PIL import Image

from dadet.data.annotations import read_annotations, write_annotations
from dadet.data.scenes import GENERATOR_VERSION, DataConfig, Domain, generate_scene
from dadet.detector.boxes import GroundTruthBox
from dadet.errors import ConfigError, DataError

MANIFEST_NAME = "manifest.json"
MANIFEST_MAGIC = "dadet-dataset"

# scene-seed blocks keep splits disjoint; source/target train share a block
# so the target split is the fogged variant of the same scenes
_SPLIT_PLAN = {
    "source_train": (Domain.SOURCE, 0),
    "target_train": (Domain.TARGET, 0),
    "source_val": (Domain.SOURCE, 1),
    "target_val": (Domain.TARGET, 2),
}
_BLOCK = 10_000_000


@dataclasses.dataclass
class SceneDataset:
    """One split held in memory: uint8 images plus per-image boxes."""

    name: str
    domain: Domain
    images: np.ndarray  # (n, size, size, 3) uint8
    boxes: list[list[GroundTruthBox]]

    def __len__(self) -> int:
        return self.images.shape[0]

    def images_float(self, idx: np.ndarray | list[int]) -> np.ndarray:
        return self.images[np.asarray(idx)].astype(np.float32) / 255.0


def _scene_seed(dataset_seed: int, block: int, index: int) -> int:
    return dataset_seed * 100_000_000 + block * _BLOCK + index


def generate_dataset(
    out_dir: str | Path,
    seed: int,
    config: DataConfig,
    n_train: int,
    n_val: int,
) -> dict:
    """Write all four splits and the manifest; returns the manifest dict."""
    if n_train < 1 or n_val < 1:
        raise ConfigError("n_train and n_val must be positive")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    counts = {"source_train": n_train, "target_train": n_train, "source_val": n_val, "target_val": n_val}
    splits: dict[str, dict] = {}
    for split, (domain, block) in _SPLIT_PLAN.items():
        split_dir = out / split
        split_dir.mkdir(exist_ok=True)
        items = []
        for i in range(counts[split]):
            image, boxes = generate_scene(_scene_seed(seed, block, i), domain, config)
            stem = f"img_{i:06d}"
            png = split_dir / f"{stem}.png"
            txt = split_dir / f"{stem}.txt"
            Image.fromarray(np.round(image * 255.0).astype(np.uint8), "RGB").save(png)
            write_annotations(boxes, txt)
            items.append({"image": f"{split}/{stem}.png", "label": f"{split}/{stem}.txt"})
        splits[split] = {"domain": domain.value, "items": items}
    manifest = {
        "magic": MANIFEST_MAGIC,
        "generator_version": GENERATOR_VERSION,
        "seed": seed,
        "config": dataclasses.asdict(config),
        "splits": splits,
    }
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_manifest(data_dir: str | Path) -> dict:
    path = Path(data_dir) / MANIFEST_NAME
    if not path.exists():
        raise DataError(f"no dataset manifest at {path}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt manifest {path}: {exc}") from exc
    if manifest.get("magic") != MANIFEST_MAGIC:
        raise DataError(f"{path} is not a dataset manifest")
    if manifest.get("generator_version") != GENERATOR_VERSION:
        raise DataError(
            f"dataset was generated with version {manifest.get('generator_version')}, "
            f"this code expects {GENERATOR_VERSION}"
        )
    return manifest


def load_split(data_dir: str | Path, split: str) -> SceneDataset:
    data_dir = Path(data_dir)
    manifest = load_manifest(data_dir)
    if split not in manifest["splits"]:
        raise DataError(f"split '{split}' not in manifest (has {sorted(manifest['splits'])})")
    entry = manifest["splits"][split]
    images = []
    boxes = []
    for item in entry["items"]:
        png = data_dir / item["image"]
        if not png.exists():
            raise DataError(f"missing image listed in manifest: {png}")
        images.append(np.asarray(Image.open(png).convert("RGB"), dtype=np.uint8))
        boxes.append(read_annotations(data_dir / item["label"]))
    if not images:
        raise DataError(f"split '{split}' is empty")
    return SceneDataset(split, Domain(entry["domain"]), np.stack(images), boxes)
