"""Detection metrics: IoU, greedy matching at an IoU threshold, per-class
average precision with all-point interpolation, and mAP.

Classes whose ground-truth count falls below a configurable minimum are
flagged as excluded and left out of the mAP mean rather than silently
dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dadet.detector.boxes import Detection, GroundTruthBox
from dadet.errors import ConfigError

Box = tuple[float, float, float, float]


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two corner boxes; degenerate boxes give 0."""
    area_a = max(0.0, a[2] - a[0]) * max(0.0, a[3] - a[1])
    area_b = max(0.0, b[2] - b[0]) * max(0.0, b[3] - b[1])
    if area_a <= 0.0 or area_b <= 0.0:
        return 0.0
    ix1, iy1 = max(a[0], b[0]), max(a[1], b[1])
    ix2, iy2 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    return inter / (area_a + area_b - inter)


def match_detections(
    detections: list[Detection],
    gt_boxes: list[Box],
    gt_classes: list[int],
    iou_thresh: float = 0.5,
) -> list[bool]:
    """TP/FP flags parallel to `detections`.

    Greedy in descending confidence: a detection is a true positive iff its
    best same-class unmatched ground truth reaches the IoU threshold; each
    ground truth matches at most once.
    """
    order = sorted(range(len(detections)), key=lambda i: -detections[i].confidence)
    matched_gt: set[int] = set()
    flags = [False] * len(detections)
    for i in order:
        det = detections[i]
        best_j, best_iou = -1, 0.0
        for j, (box, cls) in enumerate(zip(gt_boxes, gt_classes)):
            if cls != det.class_id or j in matched_gt:
                continue
            overlap = iou(det.corners, box)
            if overlap > best_iou:
                best_j, best_iou = j, overlap
        if best_j >= 0 and best_iou >= iou_thresh:
            flags[i] = True
            matched_gt.add(best_j)
    return flags


def average_precision(flags: list[bool], confidences: list[float], num_gt: int) -> float:
    """Area under the precision-recall curve with all-point interpolation."""
    if num_gt < 1:
        raise ConfigError("average_precision needs num_gt >= 1; excluded classes are flagged upstream")
    if not flags:
        return 0.0
    order = np.argsort([-c for c in confidences], kind="stable")
    tp = np.array([flags[i] for i in order], dtype=np.float64)
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(1.0 - tp)
    recall = cum_tp / num_gt
    precision = cum_tp / (cum_tp + cum_fp)

    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    for i in range(mpre.size - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    changed = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


@dataclass
class EvalResult:
    per_class_ap: dict[int, float]
    map_score: float
    counts: dict[int, int]
    excluded: list[int] = field(default_factory=list)
    class_names: dict[int, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_class_ap": {str(k): v for k, v in sorted(self.per_class_ap.items())},
            "map": self.map_score,
            "gt_counts": {str(k): v for k, v in sorted(self.counts.items())},
            "excluded_classes": sorted(self.excluded),
        }

    def format_table(self) -> str:
        header = f"{'class':<12}{'AP':>10}{'#gt':>8}"
        lines = [header, "-" * len(header)]
        for cls in sorted(self.counts):
            name = self.class_names.get(cls, str(cls))
            if cls in self.excluded:
                lines.append(f"{name:<12}{'excl.':>10}{self.counts[cls]:>8}")
            else:
                lines.append(f"{name:<12}{self.per_class_ap[cls]:>10.4f}{self.counts[cls]:>8}")
        lines.append("-" * len(header))
        lines.append(f"{'mAP':<12}{self.map_score:>10.4f}")
        return "\n".join(lines)


def evaluate_detections(
    detections_per_image: list[list[Detection]],
    gts_per_image: list[list[GroundTruthBox]],
    image_size: int,
    iou_thresh: float = 0.5,
    min_gt_count: int = 1,
    class_names: dict[int, str] | None = None,
) -> EvalResult:
    """Accumulate matches over a labeled set and reduce to per-class AP and mAP."""
    if len(detections_per_image) != len(gts_per_image):
        raise ConfigError("detections and ground truths must cover the same images")

    all_classes: set[int] = set()
    per_class_records: dict[int, list[tuple[float, bool]]] = {}
    counts: dict[int, int] = {}
    for dets, gts in zip(detections_per_image, gts_per_image):
        boxes = [g.corners(image_size) for g in gts]
        classes = [g.class_id for g in gts]
        for cls in classes:
            counts[cls] = counts.get(cls, 0) + 1
            all_classes.add(cls)
        flags = match_detections(dets, boxes, classes, iou_thresh)
        for det, flag in zip(dets, flags):
            per_class_records.setdefault(det.class_id, []).append((det.confidence, flag))
            all_classes.add(det.class_id)

    per_class_ap: dict[int, float] = {}
    excluded: list[int] = []
    for cls in sorted(all_classes):
        n_gt = counts.get(cls, 0)
        if n_gt < max(1, min_gt_count):
            excluded.append(cls)
            continue
        records = per_class_records.get(cls, [])
        per_class_ap[cls] = average_precision(
            [f for _, f in records], [c for c, _ in records], n_gt
        )

    evaluated = list(per_class_ap.values())
    map_score = float(np.mean(evaluated)) if evaluated else 0.0
    return EvalResult(
        per_class_ap=per_class_ap,
        map_score=map_score,
        counts=counts,
        excluded=excluded,
        class_names=class_names or {},
    )
