"""Adapter run configuration.

Generator and detector identities are opaque strings; their parameter
dictionaries are recorded verbatim into the emitted results file so a run
is reproducible from its outputs. Seeds default to 0..31 when the config
does not list any.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

DEFAULT_SEED_COUNT = 32

DEFAULT_GENERATION_PARAMS = {
    "guidance_scale": 7.5,
    "steps": 50,
    "scheduler": "default",
}
DEFAULT_DETECTOR_PARAMS = {
    "confidence_threshold": 0.25,
    "nms_iou": 0.8,
}


class AdapterConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AdapterConfig:
    generator_id: str = "stub-generator"
    generation_params: Mapping[str, Any] = field(
        default_factory=lambda: dict(DEFAULT_GENERATION_PARAMS)
    )
    detector_id: str = "stub-detector"
    detector_params: Mapping[str, Any] = field(
        default_factory=lambda: dict(DEFAULT_DETECTOR_PARAMS)
    )
    seeds: tuple[int, ...] = tuple(range(DEFAULT_SEED_COUNT))
    image_size: int = 64

    def __post_init__(self) -> None:
        if not self.seeds:
            raise AdapterConfigError("seed list must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise AdapterConfigError("seed list must not repeat seeds")
        if self.image_size < 8:
            raise AdapterConfigError(f"image_size too small: {self.image_size}")


def config_from_dict(doc: Mapping[str, Any]) -> AdapterConfig:
    known = {
        "generator_id",
        "generation_params",
        "detector_id",
        "detector_params",
        "seeds",
        "image_size",
    }
    unknown = set(doc) - known
    if unknown:
        raise AdapterConfigError(f"unknown config fields {sorted(unknown)}")
    kwargs: dict[str, Any] = dict(doc)
    if "seeds" in kwargs:
        kwargs["seeds"] = tuple(int(s) for s in kwargs["seeds"])
    if "generation_params" in kwargs:
        kwargs["generation_params"] = dict(kwargs["generation_params"])
    if "detector_params" in kwargs:
        kwargs["detector_params"] = dict(kwargs["detector_params"])
    return AdapterConfig(**kwargs)


def load_config(path: str | Path) -> AdapterConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AdapterConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(doc)
