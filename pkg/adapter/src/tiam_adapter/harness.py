"""Batch generation and detection over a prompt dataset.

Reads the dataset document, drives a generator across every (prompt, seed)
pair, then a detector across the produced images, and writes a results file
to the documented schema: inline column-major RLE masks plus the sRGB
triples of every foreground pixel in RLE order. Per-item failures are
recorded and skipped; the emitted file stays schema-valid.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .config import AdapterConfig
from .rle import encode_mask, foreground_pixels
from .stubs import Detector, Generator, PromptSpec, write_sidecar

RESULTS_SCHEMA_ID = "tiam-results-v1"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class GenerationItem:
    prompt_id: str
    seed: int
    image_path: Path


@dataclass(frozen=True)
class ItemFailure:
    prompt_id: str
    seed: int
    stage: str
    error: str


def load_prompts(dataset_path: str | Path) -> tuple[str, list[PromptSpec]]:
    """Dataset document -> (dataset name, prompt specs)."""
    with open(dataset_path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{dataset_path}: not valid JSON ({exc})") from None
    try:
        name = doc["template"]["name"]
        prompts = [
            PromptSpec(
                prompt_id=p["prompt_id"],
                text=p["text"],
                ground_truth=tuple((gt[0], gt[1], gt[2]) for gt in p["ground_truth"]),
            )
            for p in doc["prompts"]
        ]
    except (KeyError, TypeError, IndexError) as exc:
        raise DatasetError(f"{dataset_path}: malformed dataset document ({exc!r})") from None
    if not prompts:
        raise DatasetError(f"{dataset_path}: dataset holds no prompts")
    return name, prompts


def image_filename(prompt_id: str, seed: int) -> str:
    return f"{prompt_id}_seed{seed}.png"


def run_generation(
    prompts: Sequence[PromptSpec],
    config: AdapterConfig,
    generator: Generator,
    image_dir: str | Path,
) -> tuple[list[GenerationItem], list[ItemFailure]]:
    """One image per (prompt, seed); failures recorded, run continues."""
    image_dir = Path(image_dir)
    image_dir.mkdir(parents=True, exist_ok=True)
    items: list[GenerationItem] = []
    failures: list[ItemFailure] = []
    for prompt in prompts:
        for seed in config.seeds:
            path = image_dir / image_filename(prompt.prompt_id, seed)
            try:
                generated = generator.generate(prompt, seed)
                Image.fromarray(generated.image).save(path)
                if generated.regions:
                    write_sidecar(path, generated.regions)
            except Exception as exc:  # noqa: BLE001 - harness must keep going
                failures.append(
                    ItemFailure(prompt.prompt_id, seed, "generation", repr(exc))
                )
                continue
            items.append(GenerationItem(prompt.prompt_id, seed, path))
    return items, failures


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_detection(
    items: Sequence[GenerationItem],
    config: AdapterConfig,
    detector: Detector,
    out_path: str | Path,
    dataset_ref: str,
) -> tuple[int, list[ItemFailure]]:
    """Detect over every generated image; write the results file."""
    records = []
    failures: list[ItemFailure] = []
    for item in sorted(items, key=lambda i: (i.prompt_id, i.seed)):
        try:
            image = np.asarray(Image.open(item.image_path).convert("RGB"))
            raw_detections = detector.detect(image, item.image_path)
            detections = []
            for raw in raw_detections:
                counts = encode_mask(raw.mask)
                pixels = foreground_pixels(image, raw.mask)
                detections.append(
                    {
                        "label": raw.label,
                        "confidence": float(raw.confidence),
                        "bbox": [float(v) for v in raw.bbox],
                        "mask": {
                            "size": [int(raw.mask.shape[0]), int(raw.mask.shape[1])],
                            "counts": counts,
                        },
                        "mask_pixels": pixels.astype(int).tolist(),
                    }
                )
        except Exception as exc:  # noqa: BLE001 - harness must keep going
            failures.append(ItemFailure(item.prompt_id, item.seed, "detection", repr(exc)))
            continue
        records.append(
            {
                "prompt_id": item.prompt_id,
                "seed": item.seed,
                "image_width": int(image.shape[1]),
                "image_height": int(image.shape[0]),
                "detections": detections,
                "image_path": str(item.image_path),
                "pixel_source": "inline",
            }
        )
    doc = {
        "schema_id": RESULTS_SCHEMA_ID,
        "dataset_ref": dataset_ref,
        "model_name": config.generator_id,
        "detector_meta": dict(config.detector_params),
        "records": records,
        "generator_meta": {
            "generator_id": config.generator_id,
            "generation_params": dict(config.generation_params),
            "seeds": list(config.seeds),
        },
    }
    out_path = Path(out_path)
    _atomic_write(out_path, json.dumps(doc, indent=2) + "\n")
    if failures:
        _atomic_write(
            out_path.with_name(out_path.name + ".failures.json"),
            json.dumps(
                [
                    {
                        "prompt_id": f.prompt_id,
                        "seed": f.seed,
                        "stage": f.stage,
                        "error": f.error,
                    }
                    for f in failures
                ],
                indent=2,
            )
            + "\n",
        )
    return len(records), failures
