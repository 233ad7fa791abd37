from dadet.harness.config import RunConfig
from dadet.harness.training import TrainResult, evaluate_checkpoint, train
from dadet.harness.ablation import AblationResult, run_ablation
from dadet.harness.probe import ProbeResult, domain_confusion_probe, pixel_probe_accuracy
from dadet.harness.reporting import ReportResult, write_loss_report

__all__ = [
    "RunConfig",
    "TrainResult",
    "train",
    "evaluate_checkpoint",
    "AblationResult",
    "run_ablation",
    "ProbeResult",
    "domain_confusion_probe",
    "pixel_probe_accuracy",
    "ReportResult",
    "write_loss_report",
]
