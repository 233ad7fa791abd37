"""Darknet-style label files: one "class_id cx cy w h" line per object."""

from __future__ import annotations

from pathlib import Path

from dadet.detector.boxes import GroundTruthBox
from dadet.errors import DataError


def write_annotations(boxes: list[GroundTruthBox], path: str | Path) -> None:
    lines = [f"{b.class_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}" for b in boxes]
    Path(path).write_text("".join(line + "\n" for line in lines))


def read_annotations(path: str | Path) -> list[GroundTruthBox]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"annotation file not found: {path}")
    boxes = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 5:
            raise DataError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
        try:
            class_id = int(parts[0])
            cx, cy, w, h = (float(v) for v in parts[1:])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        try:
            boxes.append(GroundTruthBox(class_id, cx, cy, w, h))
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return boxes
