"""Run configuration with layered precedence: flags > config file > defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from .colors import BINDING_THRESHOLD_DEFAULT
from .errors import DataError, SchemaError
from .records import CONFIDENCE_THRESHOLD_DEFAULT, DEDUP_IOU_DEFAULT

MIN_IMAGES_PER_PROMPT_DEFAULT = 32


@dataclass(frozen=True)
class RunConfig:
    template_path: str | None = None
    dataset_path: str | None = None
    results_path: str | None = None
    output_dir: str = "tiam-out"
    confidence_threshold: float = CONFIDENCE_THRESHOLD_DEFAULT
    dedup_iou: float = DEDUP_IOU_DEFAULT
    binding_threshold: float = BINDING_THRESHOLD_DEFAULT
    min_images_per_prompt: int = MIN_IMAGES_PER_PROMPT_DEFAULT
    palette_path: str | None = None

    def __post_init__(self) -> None:
        for name in ("confidence_threshold", "dedup_iou", "binding_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DataError(f"{name} must be in [0, 1], got {value}")
        if self.min_images_per_prompt < 1:
            raise DataError(
                f"min_images_per_prompt must be >= 1, got {self.min_images_per_prompt}"
            )


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def load_config_file(path: str | Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, Mapping):
        raise SchemaError(f"{path}: config file must hold a JSON object")
    unknown = set(doc) - _FIELD_NAMES
    if unknown:
        raise SchemaError(f"{path}: unknown config fields {sorted(unknown)}")
    return dict(doc)


def resolve_config(
    flag_values: Mapping[str, Any] | None = None,
    file_values: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Merge flag and file settings over the defaults (flags win)."""
    merged: dict[str, Any] = {}
    for source in (file_values or {}, flag_values or {}):
        for key, value in source.items():
            if key not in _FIELD_NAMES:
                raise SchemaError(f"unknown config field {key!r}")
            if value is not None:
                merged[key] = value
    return RunConfig(**merged)
