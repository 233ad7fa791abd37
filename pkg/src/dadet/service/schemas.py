"""Request/response models for the service API."""

from __future__ import annotations

from pydantic import BaseModel, Field

from dadet.harness.config import RunConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorDetail(BaseModel):
    code: str  # "config" | "data" | "numeric" | "internal"
    message: str
    iteration: int | None = None


class ErrorResponse(BaseModel):
    error: ErrorDetail


class GenerateDataRequest(BaseModel):
    out_dir: str
    seed: int = 0
    corruption_strength: float = 1.0
    n_train: int = 2000
    n_val: int = 500
    image_size: int = 64
    num_classes: int = 3


class GenerateDataResponse(BaseModel):
    out_dir: str
    generator_version: int
    splits: dict[str, int]


class RunConfigModel(BaseModel):
    """Mirror of the harness run configuration; unset fields take its defaults."""

    model_config = {"extra": "forbid"}

    seed: int = 0
    mode: str = "adapt"
    dan_variant: str = "baseline"
    active_scales: list[str] = Field(default_factory=lambda: ["f1", "f2", "f3"])
    grl_lambda: float = 0.1
    channel_multiplier: float = 0.125
    image_size: int = 64
    num_classes: int = 3
    batch_size: int = 16
    iterations: int = 1000
    learning_rate: float = 0.02
    momentum: float = 0.9
    weight_decay: float = 0.0
    warmup_iters: int = 100
    lr_final_factor: float = 0.1
    w_obj: float = 1.0
    w_obj_pos: float = 1.0
    w_cls: float = 1.0
    w_box: float = 5.0
    anchors: list[list[list[float]]] | None = None
    conf_thresh: float = 0.05
    nms_iou: float = 0.45
    eval_iou: float = 0.5
    checkpoint_every: int = 0
    shuffle: bool = True
    num_threads: int = 1
    data_dir: str = "data"
    out_dir: str = "runs/run"

    def to_run_config(self) -> RunConfig:
        data = self.model_dump()
        if data["anchors"] is None:
            data.pop("anchors")
        return RunConfig.from_dict(data)


class TrainRequest(BaseModel):
    config: RunConfigModel


class TrainResponse(BaseModel):
    checkpoint_path: str
    log_path: str
    iterations: int
    scale_columns: list[str]
    final_l_det: float
    final_l_dc_avg: float | None
    final_l_t: float


class EvalRequest(BaseModel):
    weights: str
    data_dir: str
    split: str = "target_val"
    iou: float = 0.5
    conf_thresh: float | None = None
    min_gt_count: int | None = None


class EvalResponse(BaseModel):
    per_class_ap: dict[str, float]
    map: float
    gt_counts: dict[str, int]
    excluded_classes: list[int]
    table: str


class AblateRequest(BaseModel):
    config: RunConfigModel
    subsets: list[list[str]] | None = None  # None = all 8 combinations


class AblationRowModel(BaseModel):
    scales: list[str]
    checkpoint: str
    per_class_ap: dict[str, float]
    map: float


class AblateResponse(BaseModel):
    rows: list[AblationRowModel]
    table: str


class ProbeRequest(BaseModel):
    checkpoint: str
    data_dir: str
    seed: int = 0
    include_pixels: bool = False


class ProbeResponse(BaseModel):
    accuracies: dict[str, float]
    counts: dict[str, int]
    mean_feature_accuracy: float


class ReportRequest(BaseModel):
    log_path: str
    out_dir: str


class ReportResponse(BaseModel):
    files: list[str]
    warnings: list[str]


class ExportRequest(BaseModel):
    checkpoint: str
    out_path: str


class ExportResponse(BaseModel):
    out_path: str
