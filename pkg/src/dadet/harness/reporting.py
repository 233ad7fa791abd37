"""Loss-curve exports for post-hoc analysis.

Writes the per-classifier and averaged domain-loss series from a training
log as CSV, plus (for multi-classifier runs) a dissimilarity series: the
max pairwise absolute difference among classifier losses per iteration,
which quantifies how much the independent classifiers disagree.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from dadet.errors import DataError


@dataclass
class ReportResult:
    files: list[str]
    warnings: list[str] = field(default_factory=list)


def _read_log(log_path: Path) -> tuple[list[str], list[dict]]:
    if not log_path.exists():
        raise DataError(f"training log not found: {log_path}")
    with open(log_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"training log {log_path} is empty")
        rows = list(reader)
    return list(reader.fieldnames), rows


def write_loss_report(log_path: str | Path, out_dir: str | Path) -> ReportResult:
    log_path = Path(log_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fields, rows = _read_log(log_path)

    warnings = []
    expected = _expected_iterations(log_path)
    if expected is not None and len(rows) < expected:
        warnings.append(
            f"log has {len(rows)} records but the run was configured for {expected} iterations; "
            "reporting what exists"
        )

    dc_cols = [f for f in fields if f.startswith("l_dc_") and f != "l_dc_avg"]
    curve_cols = ["iteration", "l_det", *dc_cols, "l_dc_avg", "l_t"]
    curves_path = out_dir / "loss_curves.csv"
    with open(curves_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(curve_cols)
        for row in rows:
            writer.writerow([row.get(c, "") for c in curve_cols])
    files = [str(curves_path)]

    # classifier disagreement only exists with two or more classifiers
    if len(dc_cols) >= 2:
        dis_path = out_dir / "classifier_dissimilarity.csv"
        with open(dis_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "max_pairwise_abs_diff"])
            for row in rows:
                values = [float(row[c]) for c in dc_cols if row.get(c)]
                if len(values) >= 2:
                    spread = max(values) - min(values)
                    writer.writerow([row["iteration"], f"{spread:.8f}"])
        files.append(str(dis_path))

    return ReportResult(files=files, warnings=warnings)


def _expected_iterations(log_path: Path) -> int | None:
    config_path = log_path.parent / "run_config.json"
    if not config_path.exists():
        return None
    try:
        return int(json.loads(config_path.read_text()).get("iterations"))
    except (json.JSONDecodeError, TypeError, ValueError):
        return None
