"""Box carriers: normalized ground-truth boxes and pixel-space detections."""

from __future__ import annotations

from dataclasses import dataclass

from dadet.errors import DataError


@dataclass(frozen=True)
class GroundTruthBox:
    """Annotated object with center/size normalized to [0, 1]."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if self.class_id < 0:
            raise DataError(f"class_id must be non-negative, got {self.class_id}")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise DataError(f"box center ({self.cx}, {self.cy}) outside [0, 1]")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise DataError(f"box size ({self.w}, {self.h}) outside (0, 1]")

    def corners(self, image_size: int) -> tuple[float, float, float, float]:
        """Pixel-space (x1, y1, x2, y2), clamped to the image."""
        x1 = max(0.0, (self.cx - self.w / 2.0) * image_size)
        y1 = max(0.0, (self.cy - self.h / 2.0) * image_size)
        x2 = min(float(image_size), (self.cx + self.w / 2.0) * image_size)
        y2 = min(float(image_size), (self.cy + self.h / 2.0) * image_size)
        return x1, y1, x2, y2


@dataclass(frozen=True)
class Detection:
    """Decoded detector output in pixel corner coordinates."""

    class_id: int
    confidence: float
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise DataError(f"confidence {self.confidence} outside [0, 1]")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise DataError(
                f"degenerate detection box ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def corners(self) -> tuple[float, float, float, float]:
        return self.x1, self.y1, self.x2, self.y2
