"""Domain adaptation network variants attached to the backbone taps.

Four architectures share the same contract: a gradient reversal sits
between each tap and the first convolution, and every classifier ends in a
single-channel sigmoid map of per-location domain probabilities.

  baseline    two 1x1 convs per scale (halve channels, then classify)
  pfr         progressive channel reduction, 4/4/5 convs for f1/f2/f3
  uc          per-scale branches downsampled to the f3 grid with equal
              channel counts, concatenated into one unified classifier
  integrated  uc fusion with pfr-depth branches
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import torch
from torch import nn

from dadet.adaptation.grl import GrlConfig, reverse_gradient
from dadet.detector.model import FeaturePyramid
from dadet.errors import ConfigError


class Scale(enum.Enum):
    F1 = "f1"
    F2 = "f2"
    F3 = "f3"
    UNIFIED = "unified"


FEATURE_SCALES = (Scale.F1, Scale.F2, Scale.F3)


class DanKind(enum.Enum):
    BASELINE = "baseline"
    PFR = "pfr"
    UC = "uc"
    INTEGRATED = "integrated"


@dataclass(frozen=True)
class DanVariant:
    kind: DanKind
    active_scales: frozenset[Scale] = field(default_factory=lambda: frozenset(FEATURE_SCALES))

    def __post_init__(self):
        if not self.active_scales:
            raise ConfigError("a DAN variant needs at least one active scale")
        if Scale.UNIFIED in self.active_scales:
            raise ConfigError("active_scales must be backbone taps, not 'unified'")
        if self.kind in (DanKind.UC, DanKind.INTEGRATED) and self.active_scales != frozenset(FEATURE_SCALES):
            raise ConfigError(f"{self.kind.value} requires all three scales active")

    @property
    def ordered_scales(self) -> list[Scale]:
        return [s for s in FEATURE_SCALES if s in self.active_scales]

    @staticmethod
    def parse(kind: str, active_scales: tuple[str, ...] = ("f1", "f2", "f3")) -> "DanVariant":
        try:
            k = DanKind(kind.lower())
        except ValueError as exc:
            raise ConfigError(f"unknown DAN variant '{kind}'") from exc
        try:
            scales = frozenset(Scale(s.lower()) for s in active_scales)
        except ValueError as exc:
            raise ConfigError(f"unknown scale in {active_scales}") from exc
        return DanVariant(k, scales)


@dataclass
class DomainProbMap:
    """Per-location domain probabilities from one classifier head."""

    probs: torch.Tensor  # (batch, h, w), sigmoid outputs in (0, 1)
    scale_id: Scale

    def validate(self) -> None:
        if self.probs.ndim != 3:
            raise ConfigError(f"probability map must be (batch, h, w), got {tuple(self.probs.shape)}")
        if not bool(((self.probs > 0) & (self.probs < 1)).all()):
            raise ConfigError("domain probabilities must lie strictly in (0, 1)")


def _width(x: float) -> int:
    return max(1, round(x))


def _check_decreasing(name: str, chain: list[int]) -> None:
    for a, b in zip(chain, chain[1:]):
        if b >= a:
            raise ConfigError(
                f"{name} channel schedule {chain} is not strictly decreasing; "
                "increase the channel multiplier"
            )


def _conv_chain(c_in: int, stages: list[tuple[int, int]]) -> nn.Sequential:
    """stages: (out_channels, stride); stride-2 convs are 3x3, the rest 1x1.
    LeakyReLU between convs, none after the final (logit) layer."""
    layers: list[nn.Module] = []
    prev = c_in
    for i, (out, stride) in enumerate(stages):
        kernel = 3 if stride == 2 else 1
        layers.append(nn.Conv2d(prev, out, kernel, stride=stride, padding=kernel // 2))
        if i < len(stages) - 1:
            layers.append(nn.LeakyReLU(0.1))
        prev = out
    return nn.Sequential(*layers)


def _tap_channels(base_channels: int) -> dict[Scale, int]:
    return {Scale.F1: base_channels, Scale.F2: 2 * base_channels, Scale.F3: 4 * base_channels}


class PerScaleDan(nn.Module):
    """Baseline and PFR: one independent classifier per active scale."""

    def __init__(self, variant: DanVariant, base_channels: int, grl: GrlConfig):
        super().__init__()
        self.variant = variant
        self.grl = grl
        c = base_channels
        taps = _tap_channels(c)
        if variant.kind is DanKind.BASELINE:
            plans = {s: [(_width(taps[s] / 2), 1), (1, 1)] for s in variant.ordered_scales}
        else:  # PFR
            full = {
                Scale.F1: [_width(c / 2), _width(c / 4), _width(c / 16), 1],
                Scale.F2: [_width(c), _width(c / 4), _width(c / 16), 1],
                Scale.F3: [2 * c, _width(c), _width(c / 2), _width(c / 8), 1],
            }
            plans = {s: [(w, 1) for w in full[s]] for s in variant.ordered_scales}
        self.channel_schedules = {
            s.value: [taps[s]] + [w for w, _ in plans[s]] for s in variant.ordered_scales
        }
        for name, chain in self.channel_schedules.items():
            _check_decreasing(f"{variant.kind.value} {name}", chain)
        self.heads = nn.ModuleDict(
            {s.value: _conv_chain(taps[s], plans[s]) for s in variant.ordered_scales}
        )

    @property
    def stage_counts(self) -> dict[str, int]:
        return {name: len(chain) - 1 for name, chain in self.channel_schedules.items()}

    def forward(self, pyramid: FeaturePyramid) -> list[DomainProbMap]:
        taps = {Scale.F1: pyramid.f1, Scale.F2: pyramid.f2, Scale.F3: pyramid.f3}
        maps = []
        for scale in self.variant.ordered_scales:
            x = reverse_gradient(taps[scale], self.grl.lam)
            logits = self.heads[scale.value](x)
            maps.append(DomainProbMap(torch.sigmoid(logits[:, 0]), scale))
        return maps


class UnifiedDan(nn.Module):
    """UC and Integrated: equal-channel branches meet at the f3 grid, then one classifier."""

    def __init__(self, variant: DanVariant, base_channels: int, grl: GrlConfig):
        super().__init__()
        self.variant = variant
        self.grl = grl
        c = base_channels
        taps = _tap_channels(c)
        if variant.kind is DanKind.UC:
            # f1 is downsampled twice and f2 once so all branches meet f3's grid
            branch_plans = {
                Scale.F1: [(_width(c / 2), 2), (_width(c / 2), 2)],
                Scale.F2: [(_width(c / 2), 2)],
                Scale.F3: [(_width(c / 2), 1)],
            }
            fused_plan = [(_width(c / 2), 1), (1, 1)]
            monotone = False
        else:  # INTEGRATED: pfr-depth branches reduced all the way to one channel
            branch_plans = {
                Scale.F1: [(_width(c / 2), 2), (_width(c / 4), 2), (_width(c / 16), 1), (1, 1)],
                Scale.F2: [(_width(c), 2), (_width(c / 4), 1), (_width(c / 16), 1), (1, 1)],
                Scale.F3: [(2 * c, 1), (_width(c), 1), (_width(c / 2), 1), (_width(c / 8), 1), (1, 1)],
            }
            fused_plan = [(2, 1), (1, 1)]
            monotone = True
        self.branch_channels = {s.value: branch_plans[s][-1][0] for s in FEATURE_SCALES}
        concat = sum(self.branch_channels.values())
        self.channel_schedules = {
            s.value: [taps[s]] + [w for w, _ in branch_plans[s]] for s in FEATURE_SCALES
        }
        self.channel_schedules["fused"] = [concat] + [w for w, _ in fused_plan]
        if monotone:
            for name, chain in self.channel_schedules.items():
                _check_decreasing(f"{variant.kind.value} {name}", chain)
        self.branches = nn.ModuleDict(
            {s.value: _conv_chain(taps[s], branch_plans[s]) for s in FEATURE_SCALES}
        )
        self.branch_act = nn.LeakyReLU(0.1)
        self.fuse = _conv_chain(concat, fused_plan)

    @property
    def stage_counts(self) -> dict[str, int]:
        return {name: len(chain) - 1 for name, chain in self.channel_schedules.items() if name != "fused"}

    def forward(self, pyramid: FeaturePyramid) -> list[DomainProbMap]:
        taps = {Scale.F1: pyramid.f1, Scale.F2: pyramid.f2, Scale.F3: pyramid.f3}
        outs = []
        for scale in FEATURE_SCALES:
            x = reverse_gradient(taps[scale], self.grl.lam)
            outs.append(self.branch_act(self.branches[scale.value](x)))
        fused = self.fuse(torch.cat(outs, dim=1))
        return [DomainProbMap(torch.sigmoid(fused[:, 0]), Scale.UNIFIED)]


def build_dan(variant: DanVariant, base_channels: int, grl: GrlConfig) -> nn.Module:
    if variant.kind in (DanKind.BASELINE, DanKind.PFR):
        return PerScaleDan(variant, base_channels, grl)
    return UnifiedDan(variant, base_channels, grl)
