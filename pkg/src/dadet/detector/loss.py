"""Anchor-based detection loss: objectness BCE + class BCE + IoU box regression.

Closed form (recomputable outside autograd):
  decoded box for cell (gx, gy), anchor (aw, ah):
      bx = (sigmoid(tx) + gx) / W,  by = (sigmoid(ty) + gy) / H,
      bw = aw * (2 * sigmoid(tw))**2,  bh = ah * (2 * sigmoid(th))**2
  assignment: each ground-truth box goes to the anchor (over all scales)
  with highest shape IoU, at the grid cell containing the box center;
  collisions keep the earlier target.
  L_neg  = mean over scales of the mean BCE(obj_prob, 0) over unassigned cells
  L_pos  = mean over assignments of BCE(obj_prob, 1)
  L_cls  = mean over assignments of per-class BCE vs one-hot
  L_box  = mean over assignments of (1 - IoU(decoded, target))
  L_det  = w_obj * L_neg + w_obj_pos * L_pos + w_cls * L_cls + w_box * L_box

The positive objectness cells are normalized separately from the negatives
because they are a sub-percent minority of anchor cells; folding them into
one mean buries the detection signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from dadet.detector.boxes import GroundTruthBox
from dadet.errors import ConfigError, DataError

PROB_EPS = 1e-7

Anchors = tuple[tuple[tuple[float, float], ...], ...]  # [scale][anchor] -> (w, h)


@dataclass
class DetectionLossParts:
    total: torch.Tensor
    objectness_neg: torch.Tensor
    objectness_pos: torch.Tensor
    classification: torch.Tensor
    box: torch.Tensor
    num_assigned: int


@dataclass(frozen=True)
class Assignment:
    image: int
    scale: int
    anchor: int
    gy: int
    gx: int
    target: GroundTruthBox


def shape_iou(w1: float, h1: float, w2: float, h2: float) -> float:
    inter = min(w1, w2) * min(h1, h2)
    return inter / (w1 * h1 + w2 * h2 - inter)


def assign_targets(
    targets: list[list[GroundTruthBox]],
    anchors: Anchors,
    grid_sizes: list[tuple[int, int]],
) -> list[Assignment]:
    """Best-shape-anchor assignment at the center cell, first target wins a cell."""
    flat_anchors = [(s, a, wh) for s, scale in enumerate(anchors) for a, wh in enumerate(scale)]
    out: list[Assignment] = []
    taken: set[tuple[int, int, int, int, int]] = set()
    for b, boxes in enumerate(targets):
        for gt in boxes:
            best = max(flat_anchors, key=lambda item: shape_iou(gt.w, gt.h, *item[2]))
            s, a, _ = best
            h, w = grid_sizes[s]
            gx = min(int(gt.cx * w), w - 1)
            gy = min(int(gt.cy * h), h - 1)
            key = (b, s, a, gy, gx)
            if key in taken:
                continue
            taken.add(key)
            out.append(Assignment(b, s, a, gy, gx, gt))
    return out


def decode_cell(
    raw: torch.Tensor, anchor: tuple[float, float], gx: int, gy: int, grid_w: int, grid_h: int
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Decode one cell's (tx, ty, tw, th) into a normalized cxcywh box."""
    tx, ty, tw, th = raw[0], raw[1], raw[2], raw[3]
    bx = (torch.sigmoid(tx) + gx) / grid_w
    by = (torch.sigmoid(ty) + gy) / grid_h
    bw = anchor[0] * (2.0 * torch.sigmoid(tw)) ** 2
    bh = anchor[1] * (2.0 * torch.sigmoid(th)) ** 2
    return bx, by, bw, bh


def _box_iou_cxcywh(pred, gt_cx, gt_cy, gt_w, gt_h):
    gt = pred[0].new_tensor([gt_cx - gt_w / 2, gt_cy - gt_h / 2, gt_cx + gt_w / 2, gt_cy + gt_h / 2])
    px1, py1 = pred[0] - pred[2] / 2, pred[1] - pred[3] / 2
    px2, py2 = pred[0] + pred[2] / 2, pred[1] + pred[3] / 2
    iw = torch.clamp(torch.minimum(px2, gt[2]) - torch.maximum(px1, gt[0]), min=0)
    ih = torch.clamp(torch.minimum(py2, gt[3]) - torch.maximum(py1, gt[1]), min=0)
    inter = iw * ih
    union = pred[2] * pred[3] + gt_w * gt_h - inter
    return inter / union


def _bce(prob: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    p = prob.clamp(PROB_EPS, 1.0 - PROB_EPS)
    return -(target * p.log() + (1.0 - target) * (1.0 - p).log())


def detection_loss(
    outputs: list[torch.Tensor],
    targets: list[list[GroundTruthBox]],
    anchors: Anchors,
    num_classes: int,
    w_obj: float = 1.0,
    w_obj_pos: float = 1.0,
    w_cls: float = 1.0,
    w_box: float = 5.0,
) -> DetectionLossParts:
    """Compute L_det over a batch of annotated (source) images."""
    if len(outputs) != len(anchors):
        raise ConfigError(f"{len(outputs)} output scales vs {len(anchors)} anchor scales")
    batch = outputs[0].shape[0]
    if len(targets) != batch:
        raise DataError(f"targets for {len(targets)} images but batch has {batch}")
    for boxes in targets:
        for gt in boxes:
            if gt.class_id >= num_classes:
                raise DataError(f"class_id {gt.class_id} out of range for {num_classes} classes")

    grid_sizes = [(o.shape[-2], o.shape[-1]) for o in outputs]
    assignments = assign_targets(targets, anchors, grid_sizes)

    zero = outputs[0].sum() * 0.0
    neg_losses = []
    pos_terms = []
    for s, out in enumerate(outputs):
        obj_prob = torch.sigmoid(out[:, :, 4])
        pos_mask = torch.zeros_like(obj_prob, dtype=torch.bool)
        for asg in assignments:
            if asg.scale == s:
                pos_mask[asg.image, asg.anchor, asg.gy, asg.gx] = True
                pos_terms.append(_bce(obj_prob[asg.image, asg.anchor, asg.gy, asg.gx], obj_prob.new_tensor(1.0)))
        neg = _bce(obj_prob, torch.zeros_like(obj_prob))[~pos_mask]
        neg_losses.append(neg.mean() if neg.numel() else zero)
    l_neg = torch.stack(neg_losses).mean()
    l_pos = torch.stack(pos_terms).mean() if pos_terms else zero

    if assignments:
        cls_terms = []
        box_terms = []
        for asg in assignments:
            raw = outputs[asg.scale][asg.image, asg.anchor, :, asg.gy, asg.gx]
            h, w = grid_sizes[asg.scale]
            pred = decode_cell(raw, anchors[asg.scale][asg.anchor], asg.gx, asg.gy, w, h)
            box_terms.append(1.0 - _box_iou_cxcywh(pred, asg.target.cx, asg.target.cy, asg.target.w, asg.target.h))
            cls_prob = torch.sigmoid(raw[5:])
            one_hot = torch.zeros_like(cls_prob)
            one_hot[asg.target.class_id] = 1.0
            cls_terms.append(_bce(cls_prob, one_hot).mean())
        l_cls = torch.stack(cls_terms).mean()
        l_box = torch.stack(box_terms).mean()
    else:
        l_cls = zero
        l_box = zero

    total = w_obj * l_neg + w_obj_pos * l_pos + w_cls * l_cls + w_box * l_box
    return DetectionLossParts(total, l_neg, l_pos, l_cls, l_box, len(assignments))
