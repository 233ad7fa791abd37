"""FastAPI service wrapping the core package.

All endpoints are synchronous job-style calls operating on a shared
filesystem: requests carry paths, responses carry paths plus summaries.
Package errors map to structured bodies the CLI turns into exit codes.
"""

from __future__ import annotations

import itertools

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

import dadet
from dadet.checkpoint import export_inference_model
from dadet.data.dataset import generate_dataset
from dadet.data.scenes import DataConfig
from dadet.errors import ConfigError, DadetError, DataError, NumericError
from dadet.harness.ablation import run_ablation
from dadet.harness.config import RunConfig
from dadet.harness.probe import domain_confusion_probe
from dadet.harness.reporting import write_loss_report
from dadet.harness.training import evaluate_checkpoint, train
from dadet.service import schemas


def _error_response(code: str, message: str, status: int, iteration: int | None = None) -> JSONResponse:
    detail = schemas.ErrorDetail(code=code, message=message, iteration=iteration)
    return JSONResponse(status_code=status, content=schemas.ErrorResponse(error=detail).model_dump())


def create_app() -> FastAPI:
    app = FastAPI(title="dadet", version=dadet.__version__)

    @app.exception_handler(DadetError)
    async def handle_dadet_error(request: Request, exc: DadetError):
        if isinstance(exc, NumericError):
            return _error_response("numeric", str(exc), 500, iteration=exc.iteration)
        if isinstance(exc, ConfigError):
            return _error_response("config", str(exc), 400)
        if isinstance(exc, DataError):
            return _error_response("data", str(exc), 400)
        return _error_response("internal", str(exc), 500)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=dadet.__version__)

    @app.post("/datasets/generate", response_model=schemas.GenerateDataResponse)
    def generate(req: schemas.GenerateDataRequest):
        config = DataConfig(
            image_size=req.image_size,
            num_classes=req.num_classes,
            corruption_strength=req.corruption_strength,
        )
        manifest = generate_dataset(req.out_dir, req.seed, config, req.n_train, req.n_val)
        return schemas.GenerateDataResponse(
            out_dir=req.out_dir,
            generator_version=manifest["generator_version"],
            splits={name: len(split["items"]) for name, split in manifest["splits"].items()},
        )

    @app.post("/runs/train", response_model=schemas.TrainResponse)
    def run_train(req: schemas.TrainRequest):
        result = train(req.config.to_run_config())
        last = result.log.records[-1]
        return schemas.TrainResponse(
            checkpoint_path=str(result.checkpoint_path),
            log_path=str(result.log_path),
            iterations=len(result.log.records),
            scale_columns=result.log.scale_columns,
            final_l_det=last.l_det,
            final_l_dc_avg=last.l_dc_avg,
            final_l_t=last.l_t,
        )

    @app.post("/evaluations", response_model=schemas.EvalResponse)
    def run_eval(req: schemas.EvalRequest):
        result = evaluate_checkpoint(
            req.weights,
            req.data_dir,
            split=req.split,
            iou_thresh=req.iou,
            conf_thresh=req.conf_thresh,
            min_gt_count=req.min_gt_count,
        )
        payload = result.to_dict()
        return schemas.EvalResponse(
            per_class_ap=payload["per_class_ap"],
            map=payload["map"],
            gt_counts=payload["gt_counts"],
            excluded_classes=payload["excluded_classes"],
            table=result.format_table(),
        )

    @app.post("/ablations", response_model=schemas.AblateResponse)
    def run_ablate(req: schemas.AblateRequest):
        subsets = req.subsets
        if subsets is None:
            subsets = [
                list(combo)
                for r in range(4)
                for combo in itertools.combinations(("f1", "f2", "f3"), r)
            ]
        result = run_ablation(req.config.to_run_config(), [tuple(s) for s in subsets])
        rows = [
            schemas.AblationRowModel(
                scales=list(row.scales),
                checkpoint=row.checkpoint,
                per_class_ap=row.result.to_dict()["per_class_ap"],
                map=row.result.map_score,
            )
            for row in result.rows
        ]
        return schemas.AblateResponse(rows=rows, table=result.format_table())

    @app.post("/probes", response_model=schemas.ProbeResponse)
    def run_probe(req: schemas.ProbeRequest):
        result = domain_confusion_probe(
            req.checkpoint, req.data_dir, seed=req.seed, include_pixels=req.include_pixels
        )
        return schemas.ProbeResponse(
            accuracies=result.accuracies,
            counts=result.counts,
            mean_feature_accuracy=result.mean_feature_accuracy,
        )

    @app.post("/reports", response_model=schemas.ReportResponse)
    def run_report(req: schemas.ReportRequest):
        result = write_loss_report(req.log_path, req.out_dir)
        return schemas.ReportResponse(files=result.files, warnings=result.warnings)

    @app.post("/exports", response_model=schemas.ExportResponse)
    def run_export(req: schemas.ExportRequest):
        export_inference_model(req.checkpoint, req.out_path)
        return schemas.ExportResponse(out_path=req.out_path)

    return app


app = create_app()
