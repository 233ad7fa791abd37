"""End-to-end training loop and checkpoint evaluation.

Every iteration composes a half-source/half-target batch, runs the
backbone on all images, the neck/head and detection loss on the annotated
source half, and the adaptation network (through gradient reversal) on
everything, then takes one optimizer step on the combined loss. With
adaptation disabled the same loop degrades to plain supervised training:
detector updates are bit-identical to a run without the adaptation module.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from dadet.adaptation.dan import build_dan
from dadet.adaptation.losses import domain_classification_loss
from dadet.adaptation.objective import combine_objective
from dadet.checkpoint import (
    DETECTOR_GROUPS,
    detector_state_groups,
    load_checkpoint,
    load_detector_state,
    save_checkpoint,
)
from dadet.data.batches import DomainBatchComposer
from dadet.data.dataset import SceneDataset, load_split
from dadet.detector.decode import decode_and_nms
from dadet.detector.loss import detection_loss
from dadet.detector.model import Detector, FeaturePyramid, build_detector
from dadet.errors import ConfigError, NumericError
from dadet.evaluation import EvalResult, evaluate_detections
from dadet.harness.config import RunConfig
from dadet.data.scenes import CLASS_NAMES


@dataclass
class LogRecord:
    iteration: int
    l_det: float
    l_dc_per_scale: dict[str, float] | None
    l_dc_avg: float | None
    l_t: float
    timestamp: float


@dataclass
class TrainingLog:
    scale_columns: list[str]  # classifier columns, e.g. ["f1", "f2", "f3"] or ["unified"]
    records: list[LogRecord] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        dc_cols = [f"l_dc_{s}" for s in self.scale_columns]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "l_det", *dc_cols, "l_dc_avg", "l_t", "timestamp"])
            for r in self.records:
                dc_vals = [f"{r.l_dc_per_scale[s]:.8f}" for s in self.scale_columns] if r.l_dc_per_scale else ["" for _ in dc_cols]
                avg = f"{r.l_dc_avg:.8f}" if r.l_dc_avg is not None else ""
                writer.writerow(
                    [r.iteration, f"{r.l_det:.8f}", *dc_vals, avg, f"{r.l_t:.8f}", f"{r.timestamp:.6f}"]
                )


@dataclass
class TrainResult:
    config: RunConfig
    checkpoint_path: Path
    log_path: Path
    log: TrainingLog
    model: Detector


def _lr_at(config: RunConfig, iteration: int) -> float:
    """Linear warmup, then cosine decay to lr_final_factor of the peak."""
    if config.warmup_iters > 0 and iteration < config.warmup_iters:
        return config.learning_rate * (iteration + 1) / config.warmup_iters
    span = max(1, config.iterations - config.warmup_iters)
    progress = (iteration - config.warmup_iters) / span
    floor = config.lr_final_factor
    return config.learning_rate * (floor + (1.0 - floor) * 0.5 * (1.0 + math.cos(math.pi * progress)))


def _detection_streams(config: RunConfig) -> tuple[SceneDataset, SceneDataset]:
    """(annotated stream, unlabeled target stream); the oracle trains on labeled target."""
    target_train = load_split(config.data_dir, "target_train")
    if config.mode == "oracle":
        return target_train, target_train
    return load_split(config.data_dir, "source_train"), target_train


class _OracleBatches:
    """Plain supervised batches over the labeled target split.

    The mixed half-source/half-target composition only exists for the
    adversarial runs; the upper-bound run trains like an ordinary detector
    with the full batch annotated.
    """

    def __init__(self, dataset: SceneDataset, batch_size: int, seed: int, shuffle: bool):
        from dadet.data.batches import StreamCycler

        self.dataset = dataset
        self.batch_size = batch_size
        self._stream = StreamCycler(len(dataset), seed * 2 + 1, shuffle)

    def next_batch(self):
        idx = self._stream.take(self.batch_size)
        images = self.dataset.images_float(idx)
        boxes = [self.dataset.boxes[i] for i in idx]
        return images, boxes


def batch_to_tensor(images: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(images).permute(0, 3, 1, 2).contiguous()


def train(config: RunConfig) -> TrainResult:
    config.validate()
    det_stream, target_stream = _detection_streams(config)  # data errors surface before iteration 0
    if det_stream.images.shape[1] != config.image_size:
        raise ConfigError(
            f"dataset images are {det_stream.images.shape[1]}px but config.image_size is {config.image_size}"
        )

    torch.set_num_threads(config.num_threads)
    torch.manual_seed(config.seed)
    model = build_detector(config.channel_multiplier, config.num_classes)
    dan = build_dan(config.dan(), model.base_channels, config.grl()) if config.adaptation_active() else None

    params = list(model.parameters()) + (list(dan.parameters()) if dan is not None else [])
    optimizer = torch.optim.SGD(
        params, lr=config.learning_rate, momentum=config.momentum, weight_decay=config.weight_decay
    )
    if config.mode == "oracle":
        oracle_batches = _OracleBatches(det_stream, config.batch_size, config.seed, config.shuffle)
        composer = None
    else:
        oracle_batches = None
        composer = DomainBatchComposer(
            det_stream, target_stream, config.batch_size, seed=config.seed, shuffle=config.shuffle
        )

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.save(out_dir / "run_config.json")

    # classifier column order is discovered from the first iteration's maps
    log = TrainingLog(scale_columns=[])
    half = config.batch_size // 2
    ckpt_path = out_dir / "checkpoint.dckpt"

    for iteration in range(config.iterations):
        for group in optimizer.param_groups:
            group["lr"] = _lr_at(config, iteration)

        if oracle_batches is not None:
            images_np, det_boxes = oracle_batches.next_batch()
            outputs = model(batch_to_tensor(images_np))
            dc_result = None
        else:
            batch = composer.next_batch()
            images = batch_to_tensor(batch.images)
            pyramid = model.extract_features(images)
            source_pyramid = FeaturePyramid(pyramid.f1[:half], pyramid.f2[:half], pyramid.f3[:half])
            outputs = model.predict_from_pyramid(source_pyramid)
            det_boxes = batch.source_boxes
            dc_result = None
            if dan is not None:
                maps = dan(pyramid)
                labels = torch.from_numpy(batch.domain_labels)
                dc_result = domain_classification_loss(maps, labels)
                if not log.scale_columns:
                    log.scale_columns.extend(m.scale_id.value for m in maps)
        det_parts = detection_loss(
            outputs,
            det_boxes,
            config.anchors,
            config.num_classes,
            w_obj=config.w_obj,
            w_obj_pos=config.w_obj_pos,
            w_cls=config.w_cls,
            w_box=config.w_box,
        )

        joint = combine_objective(det_parts.total, dc_result.total if dc_result else None, config.grl())
        if not torch.isfinite(joint.training_loss):
            log.write_csv(out_dir / "training_log.csv")
            raise NumericError(
                f"non-finite loss at iteration {iteration}: "
                f"l_det={joint.l_det}, l_dc={joint.l_dc}",
                iteration=iteration,
            )

        optimizer.zero_grad()
        joint.training_loss.backward()
        optimizer.step()

        log.records.append(
            LogRecord(
                iteration=iteration,
                l_det=joint.l_det,
                l_dc_per_scale=(
                    {k: float(v.detach()) for k, v in dc_result.per_scale.items()} if dc_result else None
                ),
                l_dc_avg=joint.l_dc,
                l_t=joint.reported_total,
                timestamp=time.time(),
            )
        )

        if config.checkpoint_every > 0 and (iteration + 1) % config.checkpoint_every == 0:
            _save(ckpt_path.with_name(f"checkpoint_{iteration + 1:06d}.dckpt"), config, model, dan)

    _save(ckpt_path, config, model, dan)
    log_path = out_dir / "training_log.csv"
    log.write_csv(log_path)
    return TrainResult(config=config, checkpoint_path=ckpt_path, log_path=log_path, log=log, model=model)


def _save(path: Path, config: RunConfig, model: Detector, dan) -> None:
    groups = detector_state_groups(model)
    groups["dan"] = dan.state_dict() if dan is not None else {}
    save_checkpoint(path, config.to_dict(), groups)


def load_detector_from_checkpoint(weights_path: str | Path) -> tuple[Detector, RunConfig]:
    ckpt = load_checkpoint(weights_path, required_groups=DETECTOR_GROUPS)
    config = RunConfig.from_dict(ckpt.config)
    model = build_detector(config.channel_multiplier, config.num_classes)
    load_detector_state(model, ckpt.groups)
    model.eval()
    return model, config


def detect_images(
    model: Detector, images: np.ndarray, config: RunConfig, chunk: int = 64
) -> list:
    """Run eval-mode inference over a uint8 image stack; returns per-image detections."""
    detections = []
    model.eval()
    with torch.no_grad():
        for start in range(0, images.shape[0], chunk):
            block = images[start : start + chunk].astype(np.float32) / 255.0
            outputs = model(batch_to_tensor(block))
            detections.extend(
                decode_and_nms(outputs, config.anchors, config.image_size, config.conf_thresh, config.nms_iou)
            )
    return detections


def evaluate_checkpoint(
    weights_path: str | Path,
    data_dir: str | Path,
    split: str = "target_val",
    iou_thresh: float | None = None,
    conf_thresh: float | None = None,
    min_gt_count: int | None = None,
) -> EvalResult:
    """mAP@IoU of a stored model over one labeled split.

    The exclusion default scales the reference protocol's minimum-count rule
    (100 ground truths per 500 test images) to the split size.
    """
    model, config = load_detector_from_checkpoint(weights_path)
    if conf_thresh is not None:
        config = config.replace(conf_thresh=conf_thresh)
    dataset = load_split(data_dir, split)
    if min_gt_count is None:
        min_gt_count = max(1, round(0.2 * len(dataset)))
    detections = detect_images(model, dataset.images, config)
    return evaluate_detections(
        detections,
        dataset.boxes,
        config.image_size,
        iou_thresh if iou_thresh is not None else config.eval_iou,
        min_gt_count=min_gt_count,
        class_names=dict(enumerate(CLASS_NAMES)),
    )
