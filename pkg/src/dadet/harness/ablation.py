"""Scale-subset ablation: one baseline-variant run per subset plus the
no-adaptation row, reported as a checkmark table over per-class AP and mAP."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from dadet.errors import ConfigError
from dadet.evaluation import EvalResult
from dadet.harness.config import RunConfig
from dadet.harness.training import evaluate_checkpoint, train

SCALES = ("f1", "f2", "f3")


@dataclass
class AblationRow:
    scales: tuple[str, ...]
    result: EvalResult
    checkpoint: str


@dataclass
class AblationResult:
    rows: list[AblationRow]

    def format_table(self) -> str:
        class_ids = sorted({cls for row in self.rows for cls in row.result.per_class_ap})
        names = {}
        for row in self.rows:
            names.update(row.result.class_names)
        header = "".join(f"{s.upper():>5}" for s in SCALES)
        header += "".join(f"{names.get(c, str(c)):>12}" for c in class_ids) + f"{'mAP':>10}"
        lines = [header, "-" * len(header)]
        for row in self.rows:
            marks = "".join(f"{'x' if s in row.scales else '':>5}" for s in SCALES)
            aps = "".join(f"{row.result.per_class_ap.get(c, float('nan')):>12.4f}" for c in class_ids)
            lines.append(marks + aps + f"{row.result.map_score:>10.4f}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {"scales": list(r.scales), "checkpoint": r.checkpoint, **r.result.to_dict()}
                for r in self.rows
            ]
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def run_ablation(config: RunConfig, scale_subsets: list[tuple[str, ...]]) -> AblationResult:
    """Train and evaluate one run per scale subset; () means no adaptation."""
    if not scale_subsets:
        raise ConfigError("ablation needs at least one scale subset")
    normalized = []
    for subset in scale_subsets:
        subset = tuple(subset)
        unknown = set(subset) - set(SCALES)
        if unknown:
            raise ConfigError(f"unknown scales {sorted(unknown)} in ablation subset {subset}")
        normalized.append(tuple(s for s in SCALES if s in subset))

    rows = []
    base_out = Path(config.out_dir)
    for subset in normalized:
        tag = "none" if not subset else "_".join(subset)
        run_cfg = config.replace(
            dan_variant="baseline",
            mode="adapt" if subset else "source_only",
            active_scales=subset,
            out_dir=str(base_out / f"ablation_{tag}"),
        )
        result = train(run_cfg)
        eval_result = evaluate_checkpoint(result.checkpoint_path, config.data_dir, "target_val")
        rows.append(AblationRow(scales=subset, result=eval_result, checkpoint=str(result.checkpoint_path)))
    return AblationResult(rows=rows)
