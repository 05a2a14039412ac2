"""Stub generator and detector for exercising the harness end to end.

The stub generator paints one solid rectangle per expected object on a
light background: the slot's attribute color when the prompt names one,
otherwise a color derived from the label. It also returns the painted
regions, which the harness saves as a ``<image>.layout.json`` sidecar.
The stub detector replays those sidecars as perfect detections, reading
pixels back from the real image file. Real model integrations implement
the same two callables and ignore sidecars.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .config import AdapterConfig

BACKGROUND = (236, 236, 236)

# Convenient sRGB anchors for the six attribute colors; a custom palette
# can be supplied to match a specific reference palette file.
ATTRIBUTE_COLORS = {
    "red": (177, 48, 52),
    "green": (0, 154, 104),
    "blue": (0, 100, 166),
    "purple": (98, 44, 139),
    "pink": (248, 181, 204),
    "yellow": (247, 200, 0),
}


@dataclass(frozen=True)
class PromptSpec:
    prompt_id: str
    text: str
    ground_truth: tuple[tuple[int, str, "str | None"], ...]


@dataclass(frozen=True)
class Region:
    label: str
    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True)
class GeneratedImage:
    image: np.ndarray  # (h, w, 3) uint8
    regions: tuple[Region, ...]


@dataclass(frozen=True)
class RawDetection:
    label: str
    confidence: float
    bbox: tuple[float, float, float, float]
    mask: np.ndarray  # (h, w) bool


class Generator(Protocol):
    def generate(self, prompt: PromptSpec, seed: int) -> GeneratedImage: ...


class Detector(Protocol):
    def detect(self, image: np.ndarray, image_path: Path) -> Sequence[RawDetection]: ...


def label_color(label: str) -> tuple[int, int, int]:
    digest = hashlib.sha1(label.encode("utf-8")).digest()
    # keep channels away from the background tone
    return tuple(int(b) % 200 for b in digest[:3])


@dataclass(frozen=True)
class StubGenerator:
    config: AdapterConfig
    attribute_colors: dict[str, tuple[int, int, int]] = field(
        default_factory=lambda: dict(ATTRIBUTE_COLORS)
    )

    def generate(self, prompt: PromptSpec, seed: int) -> GeneratedImage:
        size = self.config.image_size
        image = np.full((size, size, 3), BACKGROUND, dtype=np.uint8)
        side = max(4, size // 6)
        gap = side // 2
        regions = []
        for k, (_, label, attr) in enumerate(prompt.ground_truth):
            x = 2 + k * (side + gap)
            y = 2
            if x + side > size:  # wrap to a second row if slots run out of width
                x = 2 + (k % 3) * (side + gap)
                y = 2 + side + gap
            color = self.attribute_colors.get(attr, label_color(label)) if attr else label_color(label)
            image[y : y + side, x : x + side] = color
            regions.append(Region(label=label, x=x, y=y, w=side, h=side))
        return GeneratedImage(image=image, regions=tuple(regions))


def sidecar_path(image_path: Path) -> Path:
    return image_path.with_name(image_path.name + ".layout.json")


def write_sidecar(image_path: Path, regions: Sequence[Region]) -> None:
    doc = [{"label": r.label, "x": r.x, "y": r.y, "w": r.w, "h": r.h} for r in regions]
    sidecar_path(image_path).write_text(json.dumps(doc), encoding="utf-8")


@dataclass(frozen=True)
class StubDetector:
    """Replays generation sidecars as detections; no sidecar, no detections."""

    confidence: float = 0.99

    def detect(self, image: np.ndarray, image_path: Path) -> list[RawDetection]:
        sidecar = sidecar_path(image_path)
        if not sidecar.exists():
            return []
        regions = json.loads(sidecar.read_text(encoding="utf-8"))
        h, w = image.shape[:2]
        detections = []
        for region in regions:
            mask = np.zeros((h, w), dtype=bool)
            mask[region["y"] : region["y"] + region["h"], region["x"] : region["x"] + region["w"]] = True
            detections.append(
                RawDetection(
                    label=region["label"],
                    confidence=self.confidence,
                    bbox=(float(region["x"]), float(region["y"]), float(region["w"]), float(region["h"])),
                    mask=mask,
                )
            )
        return detections
