"""Mixed-batch composition: half labeled source, half unlabeled target.

Both streams cycle independently (dataset sizes may differ): each stream
reshuffles per epoch under its own seeded generator, or walks sequentially
with wraparound when shuffling is off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dadet.data.dataset import SceneDataset
from dadet.detector.boxes import GroundTruthBox
from dadet.errors import ConfigError


@dataclass
class DomainBatch:
    images: np.ndarray  # (B, size, size, 3) float32 in [0, 1]
    source_boxes: list[list[GroundTruthBox]]  # annotations for the first B/2 images
    domain_labels: np.ndarray  # (B,) float32, 1 = source, 0 = target

    def validate(self) -> None:
        b = self.images.shape[0]
        half = b // 2
        if b % 2 != 0:
            raise ConfigError(f"batch size {b} must be even")
        if len(self.source_boxes) != half:
            raise ConfigError(f"{len(self.source_boxes)} annotation lists for {half} source images")
        expected = np.concatenate([np.ones(half), np.zeros(half)]).astype(np.float32)
        if not np.array_equal(self.domain_labels, expected):
            raise ConfigError("domain labels must be 1 for the source half then 0 for the target half")


class StreamCycler:
    """Deterministic index stream over [0, n): per-epoch shuffles or sequential."""

    def __init__(self, n: int, seed: int, shuffle: bool = True):
        if n < 1:
            raise ConfigError("cannot cycle an empty dataset")
        self.n = n
        self.shuffle = shuffle
        self._rng = np.random.default_rng(seed)
        self._order = self._new_epoch()
        self._pos = 0

    def _new_epoch(self) -> np.ndarray:
        return self._rng.permutation(self.n) if self.shuffle else np.arange(self.n)

    def take(self, k: int) -> np.ndarray:
        out = []
        while k > 0:
            available = self.n - self._pos
            grab = min(k, available)
            out.append(self._order[self._pos : self._pos + grab])
            self._pos += grab
            k -= grab
            if self._pos == self.n:
                self._order = self._new_epoch()
                self._pos = 0
        return np.concatenate(out)


class DomainBatchComposer:
    def __init__(
        self,
        source: SceneDataset,
        target: SceneDataset,
        batch_size: int,
        seed: int = 0,
        shuffle: bool = True,
    ):
        if batch_size % 2 != 0 or batch_size < 2:
            raise ConfigError(f"batch size must be even and >= 2, got {batch_size}")
        self.source = source
        self.target = target
        self.half = batch_size // 2
        self._source_stream = StreamCycler(len(source), seed * 2 + 1, shuffle)
        self._target_stream = StreamCycler(len(target), seed * 2 + 2, shuffle)

    def next_batch(self) -> DomainBatch:
        s_idx = self._source_stream.take(self.half)
        t_idx = self._target_stream.take(self.half)
        images = np.concatenate([self.source.images_float(s_idx), self.target.images_float(t_idx)])
        labels = np.concatenate([np.ones(self.half), np.zeros(self.half)]).astype(np.float32)
        boxes = [self.source.boxes[i] for i in s_idx]
        return DomainBatch(images=images, source_boxes=boxes, domain_labels=labels)
