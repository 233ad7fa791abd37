"""Domain classification loss.

For one probability map: L = -(1/N) * sum over images i and locations (x, y)
of [t_i ln p + (1 - t_i) ln(1 - p)], where N is batch size times the number
of map elements. Several maps (one per classifier) average to one scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from dadet.adaptation.dan import DomainProbMap
from dadet.errors import ConfigError

PROB_EPS = 1e-7  # probabilities clamped away from {0, 1} before the log


@dataclass
class DomainLossResult:
    total: torch.Tensor
    per_scale: dict[str, torch.Tensor]


def make_domain_labels(num_source: int, num_target: int, dtype=torch.float32) -> torch.Tensor:
    """t_i = 1 for source images, 0 for target images."""
    return torch.cat([torch.ones(num_source, dtype=dtype), torch.zeros(num_target, dtype=dtype)])


def _validate_labels(labels: torch.Tensor) -> None:
    if labels.ndim != 1:
        raise ConfigError(f"domain labels must be a vector, got shape {tuple(labels.shape)}")
    if not bool(((labels == 0) | (labels == 1)).all()):
        raise ConfigError("domain labels must be 0 (target) or 1 (source)")


def single_map_loss(prob_map: DomainProbMap, labels: torch.Tensor) -> torch.Tensor:
    probs = prob_map.probs
    if probs.shape[0] != labels.shape[0]:
        raise ConfigError(
            f"map batch {probs.shape[0]} does not match {labels.shape[0]} domain labels"
        )
    p = probs.clamp(PROB_EPS, 1.0 - PROB_EPS)
    t = labels.to(p.dtype).view(-1, 1, 1)
    return -(t * p.log() + (1.0 - t) * (1.0 - p).log()).mean()


def domain_classification_loss(prob_maps: list[DomainProbMap], labels: torch.Tensor) -> DomainLossResult:
    """Average the per-classifier losses into one scalar; multi-scale variants
    contribute each classifier symmetrically."""
    if not prob_maps:
        raise ConfigError("at least one probability map is required")
    _validate_labels(labels)
    per_scale = {m.scale_id.value: single_map_loss(m, labels) for m in prob_maps}
    total = torch.stack(list(per_scale.values())).mean()
    return DomainLossResult(total=total, per_scale=per_scale)
