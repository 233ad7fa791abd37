"""Synthetic scene rendering and fog corruption.

Scenes contain bright geometric objects (circle, rectangle, triangle, by
class id) on a darker gradient background with grey clutter. The target
domain re-renders the identical scene and then applies a uniform haze
blend toward white, contrast reduction, and additive Gaussian noise.
Scene content depends only on the seed, never on the domain, so a zero
corruption strength makes both domains pixel-identical.
"""

from __future__ import annotations

import colorsys
import enum
from dataclasses import dataclass, field

import numpy as np

from dadet.detector.boxes import GroundTruthBox
from dadet.errors import ConfigError

# seed-stream namespaces; bump GENERATOR_VERSION when rendering changes
GENERATOR_VERSION = 1
_NS_SCENE = 101
_NS_FOG = 202

CLASS_NAMES = ("circle", "rectangle", "triangle")
_CLASS_HUES = (0.00, 0.33, 0.60)


class Domain(enum.Enum):
    SOURCE = "source"
    TARGET = "target"


@dataclass(frozen=True)
class DataConfig:
    image_size: int = 64
    num_classes: int = 3
    min_objects: int = 1
    max_objects: int = 3
    size_range: tuple[float, float] = (0.18, 0.38)
    clutter_count: int = 3
    corruption_strength: float = 1.0
    fog_alpha_range: tuple[float, float] = (0.45, 0.65)
    contrast_range: tuple[float, float] = (0.5, 0.7)
    noise_sigma: float = 0.03

    def __post_init__(self):
        if self.image_size <= 0:
            raise ConfigError(f"image_size must be positive, got {self.image_size}")
        if not (2 <= self.num_classes <= len(CLASS_NAMES)):
            raise ConfigError(f"num_classes must be in [2, {len(CLASS_NAMES)}], got {self.num_classes}")
        if not (0 <= self.min_objects <= self.max_objects):
            raise ConfigError("need 0 <= min_objects <= max_objects")
        if self.corruption_strength < 0:
            raise ConfigError("corruption_strength must be non-negative")


@dataclass(frozen=True)
class ObjectSpec:
    class_id: int
    cx: float
    cy: float
    w: float
    h: float
    color: tuple[float, float, float]


@dataclass(frozen=True)
class SceneSpec:
    seed: int
    domain: Domain
    sky: tuple[float, float, float]
    ground: tuple[float, float, float]
    clutter: tuple[tuple[float, float, float, float, float], ...]  # cx, cy, w, h, value
    objects: tuple[ObjectSpec, ...] = field(default_factory=tuple)


def _boxes_overlap(a: ObjectSpec, cx, cy, w, h) -> bool:
    return abs(a.cx - cx) < (a.w + w) / 2 and abs(a.cy - cy) < (a.h + h) / 2


def sample_scene_spec(seed: int, domain: Domain, config: DataConfig) -> SceneSpec:
    rng = np.random.default_rng([_NS_SCENE, GENERATOR_VERSION, seed])
    sky_v = rng.uniform(0.10, 0.30)
    ground_v = rng.uniform(0.22, 0.42)
    sky = (sky_v * 0.8, sky_v * 0.9, min(1.0, sky_v * 1.3))
    ground = (ground_v, ground_v * 0.95, ground_v * 0.85)

    clutter = []
    for _ in range(int(rng.integers(0, config.clutter_count + 1))):
        cw, ch = rng.uniform(0.08, 0.3, size=2)
        ccx = rng.uniform(cw / 2, 1 - cw / 2)
        ccy = rng.uniform(ch / 2, 1 - ch / 2)
        clutter.append((ccx, ccy, cw, ch, rng.uniform(0.15, 0.4)))

    objects: list[ObjectSpec] = []
    n_objects = int(rng.integers(config.min_objects, config.max_objects + 1))
    lo, hi = config.size_range
    for _ in range(n_objects):
        class_id = int(rng.integers(config.num_classes))
        for _attempt in range(20):
            w = float(rng.uniform(lo, hi))
            if class_id == 0:  # circle
                h = w
            elif class_id == 1:  # rectangle
                h = float(np.clip(w * rng.uniform(0.6, 1.4), lo, hi))
            else:  # triangle
                h = float(np.clip(w * rng.uniform(0.8, 1.2), lo, hi))
            margin = 0.02
            cx = float(rng.uniform(w / 2 + margin, 1 - w / 2 - margin))
            cy = float(rng.uniform(h / 2 + margin, 1 - h / 2 - margin))
            if not any(_boxes_overlap(o, cx, cy, w, h) for o in objects):
                hue = (_CLASS_HUES[class_id] + rng.uniform(-0.06, 0.06)) % 1.0
                color = colorsys.hsv_to_rgb(hue, rng.uniform(0.75, 1.0), rng.uniform(0.8, 1.0))
                objects.append(ObjectSpec(class_id, cx, cy, w, h, color))
                break
        # unplaceable object (too crowded): drop it
    return SceneSpec(seed, domain, sky, ground, tuple(clutter), tuple(objects))


def render_scene(spec: SceneSpec, config: DataConfig) -> np.ndarray:
    s = config.image_size
    yy, xx = np.mgrid[0:s, 0:s]
    # pixel centers in normalized coordinates
    py = (yy + 0.5) / s
    px = (xx + 0.5) / s

    t = py[..., None]
    img = (1 - t) * np.asarray(spec.sky, dtype=np.float64) + t * np.asarray(spec.ground, dtype=np.float64)

    for ccx, ccy, cw, ch, value in spec.clutter:
        mask = (np.abs(px - ccx) <= cw / 2) & (np.abs(py - ccy) <= ch / 2)
        img[mask] = value

    for obj in spec.objects:
        if obj.class_id == 0:
            mask = (px - obj.cx) ** 2 + (py - obj.cy) ** 2 <= (obj.w / 2) ** 2
        elif obj.class_id == 1:
            mask = (np.abs(px - obj.cx) <= obj.w / 2) & (np.abs(py - obj.cy) <= obj.h / 2)
        else:
            top = obj.cy - obj.h / 2
            frac = np.clip((py - top) / obj.h, 0.0, 1.0)
            mask = (py >= top) & (py <= obj.cy + obj.h / 2) & (np.abs(px - obj.cx) <= frac * obj.w / 2)
        img[mask] = obj.color

    return img.astype(np.float32)


def apply_fog(
    image: np.ndarray,
    alpha: float,
    contrast: float,
    noise_sigma: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Uniform haze toward white, global contrast reduction, additive noise.

    Each step is skipped when its parameter is the identity value so that
    zero-strength corruption returns the input pixel-exact.
    """
    out = image
    if contrast != 1.0:
        out = 0.5 + contrast * (out - 0.5)
    if alpha != 0.0:
        out = (1.0 - alpha) * out + alpha
    if noise_sigma > 0.0:
        if rng is None:
            raise ConfigError("noise_sigma > 0 requires an rng")
        out = out + rng.normal(0.0, noise_sigma, size=out.shape)
    if out is not image:
        out = np.clip(out, 0.0, 1.0).astype(np.float32)
    return out


def generate_scene(seed: int, domain: Domain, config: DataConfig) -> tuple[np.ndarray, list[GroundTruthBox]]:
    """Render one scene; target scenes share content with source and add fog."""
    spec = sample_scene_spec(seed, domain, config)
    image = render_scene(spec, config)
    if domain is Domain.TARGET and config.corruption_strength > 0:
        rng = np.random.default_rng([_NS_FOG, GENERATOR_VERSION, seed])
        s = config.corruption_strength
        alpha = min(0.95, float(rng.uniform(*config.fog_alpha_range)) * s)
        contrast = 1.0 - (1.0 - float(rng.uniform(*config.contrast_range))) * s
        image = apply_fog(image, alpha, contrast, config.noise_sigma * s, rng)
    boxes = [GroundTruthBox(o.class_id, o.cx, o.cy, o.w, o.h) for o in spec.objects]
    return image, boxes
