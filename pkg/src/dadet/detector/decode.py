"""Decode head outputs into pixel-space detections with per-class greedy NMS."""

from __future__ import annotations

import torch

from dadet.detector.boxes import Detection
from dadet.detector.loss import Anchors
from dadet.errors import ConfigError


def iou_corners(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    ix1, iy1 = max(a[0], b[0]), max(a[1], b[1])
    ix2, iy2 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    area_a = max(0.0, a[2] - a[0]) * max(0.0, a[3] - a[1])
    area_b = max(0.0, b[2] - b[0]) * max(0.0, b[3] - b[1])
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def nms(detections: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy suppression: drop a detection if a kept same-class one overlaps it
    with IoU strictly above the threshold. Input order by descending confidence."""
    kept: list[Detection] = []
    for det in detections:
        suppressed = any(
            k.class_id == det.class_id and iou_corners(k.corners, det.corners) > iou_threshold
            for k in kept
        )
        if not suppressed:
            kept.append(det)
    return kept


def decode_and_nms(
    outputs: list[torch.Tensor],
    anchors: Anchors,
    image_size: int,
    confidence_threshold: float,
    iou_threshold: float,
) -> list[list[Detection]]:
    """Per-image detections, sorted by descending confidence.

    Confidence is objectness times the best class probability; boxes are
    clamped to the image and degenerate ones dropped.
    """
    for name, value in [("confidence_threshold", confidence_threshold), ("iou_threshold", iou_threshold)]:
        if not (0.0 < value < 1.0):
            raise ConfigError(f"{name} must lie in (0, 1), got {value}")

    batch = outputs[0].shape[0]
    results: list[list[Detection]] = []
    for b in range(batch):
        candidates: list[Detection] = []
        for s, out in enumerate(outputs):
            _, num_anchors, _, h, w = out.shape
            sig = torch.sigmoid(out[b].detach())
            for a in range(num_anchors):
                aw, ah = anchors[s][a]
                obj = sig[a, 4]
                cls = sig[a, 5:]
                best_cls = torch.argmax(cls, dim=0)
                gy, gx = torch.meshgrid(
                    torch.arange(h, dtype=out.dtype), torch.arange(w, dtype=out.dtype), indexing="ij"
                )
                bx = (sig[a, 0] + gx) / w
                by = (sig[a, 1] + gy) / h
                bw = aw * (2.0 * sig[a, 2]) ** 2
                bh = ah * (2.0 * sig[a, 3]) ** 2
                conf = obj * cls.max(dim=0).values
                keep = (conf >= confidence_threshold).nonzero(as_tuple=False)
                for yx in keep:
                    y, x = int(yx[0]), int(yx[1])
                    x1 = max(0.0, float(bx[y, x] - bw[y, x] / 2) * image_size)
                    y1 = max(0.0, float(by[y, x] - bh[y, x] / 2) * image_size)
                    x2 = min(float(image_size), float(bx[y, x] + bw[y, x] / 2) * image_size)
                    y2 = min(float(image_size), float(by[y, x] + bh[y, x] / 2) * image_size)
                    if x2 <= x1 or y2 <= y1:
                        continue
                    candidates.append(
                        Detection(
                            class_id=int(best_cls[y, x]),
                            confidence=min(1.0, float(conf[y, x])),
                            x1=x1, y1=y1, x2=x2, y2=y2,
                        )
                    )
        # stable order: confidence desc, then geometry for deterministic ties
        candidates.sort(key=lambda d: (-d.confidence, d.class_id, d.x1, d.y1, d.x2, d.y2))
        results.append(nms(candidates, iou_threshold))
    return results
