"""Compact single-stage detector: strided backbone with three taps, FPN-lite
neck, and an anchor-based head.

The backbone realizes the 1:2:4 pyramid contract: taps at strides 8/16/32
with channel counts C, 2C, 4C where C = 256 * channel_multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from dadet.errors import ConfigError

TOTAL_STRIDE = 32
SCALE_STRIDES = (8, 16, 32)
REFERENCE_BASE_CHANNELS = 256  # tap channels at multiplier 1.0


@dataclass
class FeaturePyramid:
    """The three backbone taps: f1 (d, d, C), f2 (d/2, d/2, 2C), f3 (d/4, d/4, 4C)."""

    f1: torch.Tensor
    f2: torch.Tensor
    f3: torch.Tensor

    def __iter__(self):
        return iter((self.f1, self.f2, self.f3))

    @property
    def base_width(self) -> int:
        return self.f1.shape[-1]

    @property
    def base_channels(self) -> int:
        return self.f1.shape[1]

    def validate(self) -> None:
        d, c = self.base_width, self.base_channels
        if d % 4 != 0:
            raise ConfigError(f"pyramid base width {d} not divisible by 4")
        for k, (feat, div, mult) in enumerate(
            [(self.f1, 1, 1), (self.f2, 2, 2), (self.f3, 4, 4)], start=1
        ):
            expected = (d // div, d // div, c * mult)
            got = (feat.shape[-2], feat.shape[-1], feat.shape[1])
            if got != expected:
                raise ConfigError(f"f{k} shape {got} violates halving/doubling law, expected {expected}")


def base_channels_for(multiplier: float) -> int:
    """Tap channel count C for a multiplier; must stay a positive multiple of 4."""
    c = round(REFERENCE_BASE_CHANNELS * multiplier)
    if c < 4 or c % 4 != 0:
        raise ConfigError(
            f"channel multiplier {multiplier} gives base channels {c}; need a positive multiple of 4"
        )
    return c


def _group_norm(channels: int) -> nn.GroupNorm:
    # groups sized so each holds >= 4 channels; falls back to 1 group
    groups = min(8, max(1, channels // 4))
    while channels % groups:
        groups -= 1
    return nn.GroupNorm(groups, channels)


class ConvBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, kernel: int = 3, stride: int = 1):
        super().__init__()
        self.conv = nn.Conv2d(c_in, c_out, kernel, stride=stride, padding=kernel // 2)
        self.norm = _group_norm(c_out)
        self.act = nn.LeakyReLU(0.1)

    def forward(self, x):
        return self.act(self.norm(self.conv(x)))


class Backbone(nn.Module):
    """Five stride-2 stages; the last three feed the pyramid taps."""

    def __init__(self, base_channels: int):
        super().__init__()
        c = base_channels
        widths = [c // 4, c // 2, c, 2 * c, 4 * c]
        stages = []
        c_in = 3
        for w in widths:
            stages.append(nn.Sequential(ConvBlock(c_in, w, stride=2), ConvBlock(w, w)))
            c_in = w
        self.stages = nn.ModuleList(stages)

    def forward(self, images: torch.Tensor) -> FeaturePyramid:
        x = images
        taps = []
        for i, stage in enumerate(self.stages):
            x = stage(x)
            if i >= 2:
                taps.append(x)
        return FeaturePyramid(*taps)


class Neck(nn.Module):
    """Top-down fusion of the three taps to a common width C."""

    def __init__(self, base_channels: int):
        super().__init__()
        c = base_channels
        self.lateral1 = ConvBlock(c, c, kernel=1)
        self.lateral2 = ConvBlock(2 * c, c, kernel=1)
        self.lateral3 = ConvBlock(4 * c, c, kernel=1)
        self.smooth1 = ConvBlock(c, c)
        self.smooth2 = ConvBlock(c, c)
        self.smooth3 = ConvBlock(c, c)
        self.up = nn.Upsample(scale_factor=2, mode="nearest")

    def forward(self, pyramid: FeaturePyramid) -> tuple[torch.Tensor, ...]:
        m3 = self.lateral3(pyramid.f3)
        m2 = self.lateral2(pyramid.f2) + self.up(m3)
        m1 = self.lateral1(pyramid.f1) + self.up(m2)
        return self.smooth1(m1), self.smooth2(m2), self.smooth3(m3)


class Head(nn.Module):
    """Per-scale prediction of (tx, ty, tw, th, obj, class logits) per anchor."""

    def __init__(self, base_channels: int, num_classes: int, anchors_per_scale: int):
        super().__init__()
        self.num_classes = num_classes
        self.anchors_per_scale = anchors_per_scale
        c = base_channels
        out = anchors_per_scale * (5 + num_classes)
        self.branches = nn.ModuleList(
            [nn.Sequential(ConvBlock(c, c), nn.Conv2d(c, out, 1)) for _ in range(3)]
        )
        # background prior: start objectness near zero so the sparse positive
        # cells dominate the early gradient
        stride = 5 + num_classes
        with torch.no_grad():
            for branch in self.branches:
                for a in range(anchors_per_scale):
                    branch[-1].bias[a * stride + 4] = -4.0

    def forward(self, feats: tuple[torch.Tensor, ...]) -> list[torch.Tensor]:
        outputs = []
        for branch, feat in zip(self.branches, feats):
            raw = branch(feat)
            b, _, h, w = raw.shape
            outputs.append(raw.view(b, self.anchors_per_scale, 5 + self.num_classes, h, w))
        return outputs


class Detector(nn.Module):
    """Backbone + neck + head; parameter groups match the checkpoint layout."""

    def __init__(self, base_channels: int, num_classes: int, anchors_per_scale: int = 3):
        super().__init__()
        self.base_channels = base_channels
        self.num_classes = num_classes
        self.backbone = Backbone(base_channels)
        self.neck = Neck(base_channels)
        self.head = Head(base_channels, num_classes, anchors_per_scale)

    def extract_features(self, images: torch.Tensor) -> FeaturePyramid:
        if images.ndim != 4 or images.shape[0] == 0:
            raise ConfigError(f"expected a non-empty NCHW image batch, got shape {tuple(images.shape)}")
        side = images.shape[-1]
        if images.shape[-2] != side or side % TOTAL_STRIDE != 0:
            raise ConfigError(
                f"image side must be square and divisible by {TOTAL_STRIDE}, got "
                f"{images.shape[-2]}x{side}"
            )
        return self.backbone(images)

    def forward(self, images: torch.Tensor) -> list[torch.Tensor]:
        return self.head(self.neck(self.extract_features(images)))

    def predict_from_pyramid(self, pyramid: FeaturePyramid) -> list[torch.Tensor]:
        return self.head(self.neck(pyramid))


def build_detector(channel_multiplier: float, num_classes: int, anchors_per_scale: int = 3) -> Detector:
    if num_classes < 1:
        raise ConfigError(f"num_classes must be >= 1, got {num_classes}")
    return Detector(base_channels_for(channel_multiplier), num_classes, anchors_per_scale)
