"""Detection/segmentation results: schema IO, validation, filtering, dedup.

One results file carries every detection produced for a corpus of generated
images. The file is self-contained: masks are inline uncompressed RLE and,
when attribute scoring is wanted, each detection inlines the sRGB colors of
its foreground pixels (in RLE column-major order), so the scoring core never
opens an image.

Pipeline order is fixed: confidence filter, then overlap dedup, then
scoring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError, SchemaError
from .fileio import atomic_write_text
from .masks import SegmentationMask, mask_iou

RESULTS_SCHEMA_ID = "tiam-results-v1"
CONFIDENCE_THRESHOLD_DEFAULT = 0.25
DEDUP_IOU_DEFAULT = 0.95

PIXEL_SOURCE_INLINE = "inline"


@dataclass(frozen=True, eq=False)
class Detection:
    """One detected object: label, confidence, bbox (x, y, w, h), mask."""

    detection_id: int
    label: str
    confidence: float
    bbox: tuple[float, float, float, float]
    mask: SegmentationMask
    mask_pixels: np.ndarray | None = None  # (area, 3) uint8, RLE order

    def lab_pixels(self) -> np.ndarray:
        if self.mask_pixels is None:
            raise DataError(
                f"detection {self.detection_id} ({self.label}) carries no mask pixel colors"
            )
        from .colors import srgb_to_lab_array

        return srgb_to_lab_array(self.mask_pixels)


@dataclass(frozen=True)
class ImageRecord:
    """All detections for one (prompt, seed) image."""

    prompt_id: str
    seed: int
    image_width: int
    image_height: int
    detections: tuple[Detection, ...]
    image_path: str | None = None
    pixel_source: str | None = None


@dataclass(frozen=True)
class ResultsFile:
    dataset_ref: str
    model_name: str
    detector_meta: Mapping[str, float]
    records: tuple[ImageRecord, ...]


def filter_confidence(
    record: ImageRecord, threshold: float = CONFIDENCE_THRESHOLD_DEFAULT
) -> ImageRecord:
    """Keep detections with confidence >= threshold, preserving order."""
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"confidence threshold must be in [0, 1], got {threshold}")
    kept = tuple(d for d in record.detections if d.confidence >= threshold)
    return replace(record, detections=kept)


def dedup_overlaps(record: ImageRecord, iou_threshold: float = DEDUP_IOU_DEFAULT) -> ImageRecord:
    """Drop both members of every differently-labeled pair with IoU >= threshold.

    Pairs are scanned on the original detection set, then the union of
    flagged detections is removed, so the result does not depend on scan
    order. Same-label pairs are never dropped by this rule.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise DataError(f"dedup IoU threshold must be in [0, 1], got {iou_threshold}")
    dets = record.detections
    removed: set[int] = set()
    for i in range(len(dets)):
        for j in range(i + 1, len(dets)):
            if dets[i].label == dets[j].label:
                continue
            if mask_iou(dets[i].mask, dets[j].mask) >= iou_threshold:
                removed.add(i)
                removed.add(j)
    kept = tuple(d for i, d in enumerate(dets) if i not in removed)
    return replace(record, detections=kept)


# --- results document --------------------------------------------------------


def _require(condition: bool, where: str, message: str) -> None:
    if not condition:
        raise SchemaError(f"{where}: {message}")


def _parse_detection(doc: Mapping, where: str, det_id: int, width: int, height: int) -> Detection:
    for key in ("label", "confidence", "bbox", "mask"):
        _require(key in doc, where, f"missing field {key!r}")
    confidence = doc["confidence"]
    _require(
        isinstance(confidence, (int, float)) and 0.0 <= confidence <= 1.0,
        where,
        f"confidence {confidence!r} outside [0, 1]",
    )
    bbox = doc["bbox"]
    _require(isinstance(bbox, list) and len(bbox) == 4, where, "bbox must be [x, y, w, h]")
    x, y, w, h = (float(v) for v in bbox)
    _require(w >= 0 and h >= 0, where, "bbox extents must be non-negative")
    _require(
        0 <= x and 0 <= y and x + w <= width and y + h <= height,
        where,
        f"bbox {bbox} exceeds image bounds {width}x{height}",
    )
    mask_doc = doc["mask"]
    _require(
        isinstance(mask_doc, Mapping) and "size" in mask_doc and "counts" in mask_doc,
        where,
        "mask must carry size [h, w] and counts",
    )
    mh, mw = (int(v) for v in mask_doc["size"])
    _require((mw, mh) == (width, height), where, f"mask size {mh}x{mw} != image {height}x{width}")
    try:
        mask = SegmentationMask(width=mw, height=mh, counts=tuple(int(c) for c in mask_doc["counts"]))
    except DataError as exc:
        raise SchemaError(f"{where}.mask: {exc}") from None
    pixels = None
    if "mask_pixels" in doc and doc["mask_pixels"] is not None:
        raw = doc["mask_pixels"]
        _require(
            isinstance(raw, list) and len(raw) == mask.area,
            where,
            f"mask_pixels length {len(raw) if isinstance(raw, list) else '?'} != foreground area {mask.area}",
        )
        arr = np.asarray(raw, dtype=np.int64)
        _require(
            arr.ndim == 2 and arr.shape[1] == 3,
            where,
            "mask_pixels must be (r, g, b) triples",
        )
        _require(
            bool((arr >= 0).all() and (arr <= 255).all()),
            where,
            "mask_pixels channels must be in 0..255",
        )
        pixels = arr.astype(np.uint8)
    return Detection(
        detection_id=det_id,
        label=str(doc["label"]),
        confidence=float(confidence),
        bbox=(x, y, w, h),
        mask=mask,
        mask_pixels=pixels,
    )


def _parse_record(doc: Mapping, where: str, known_prompt_ids: set[str] | None) -> ImageRecord:
    for key in ("prompt_id", "seed", "image_width", "image_height", "detections"):
        _require(key in doc, where, f"missing field {key!r}")
    prompt_id = str(doc["prompt_id"])
    if known_prompt_ids is not None:
        _require(
            prompt_id in known_prompt_ids,
            where,
            f"prompt_id {prompt_id!r} does not resolve against the prompt dataset",
        )
    width, height = int(doc["image_width"]), int(doc["image_height"])
    _require(width > 0 and height > 0, where, "image dimensions must be positive")
    detections = tuple(
        _parse_detection(det, f"{where}.detections[{k}]", k, width, height)
        for k, det in enumerate(doc["detections"])
    )
    return ImageRecord(
        prompt_id=prompt_id,
        seed=int(doc["seed"]),
        image_width=width,
        image_height=height,
        detections=detections,
        image_path=doc.get("image_path"),
        pixel_source=doc.get("pixel_source"),
    )


def results_from_dict(doc: Mapping, known_prompt_ids: Iterable[str] | None = None) -> ResultsFile:
    _require(isinstance(doc, Mapping), "results", "top level must be an object")
    _require("schema_id" in doc, "results", "missing field 'schema_id'")
    _require(
        doc["schema_id"] == RESULTS_SCHEMA_ID,
        "results.schema_id",
        f"expected {RESULTS_SCHEMA_ID!r}, got {doc['schema_id']!r}",
    )
    for key in ("dataset_ref", "model_name", "records"):
        _require(key in doc, "results", f"missing field {key!r}")
    ids = set(known_prompt_ids) if known_prompt_ids is not None else None
    records = tuple(
        _parse_record(rec, f"records[{k}]", ids) for k, rec in enumerate(doc["records"])
    )
    seen: set[tuple[str, int]] = set()
    for k, rec in enumerate(records):
        key = (rec.prompt_id, rec.seed)
        _require(key not in seen, f"records[{k}]", f"duplicate (prompt_id, seed) {key}")
        seen.add(key)
    return ResultsFile(
        dataset_ref=str(doc["dataset_ref"]),
        model_name=str(doc["model_name"]),
        detector_meta=dict(doc.get("detector_meta", {})),
        records=records,
    )


def load_results(path: str | Path, known_prompt_ids: Iterable[str] | None = None) -> ResultsFile:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return results_from_dict(doc, known_prompt_ids)


def results_to_dict(results: ResultsFile) -> dict:
    records = []
    for rec in results.records:
        detections = []
        for det in rec.detections:
            det_doc: dict = {
                "label": det.label,
                "confidence": det.confidence,
                "bbox": list(det.bbox),
                "mask": {
                    "size": [det.mask.height, det.mask.width],
                    "counts": list(det.mask.counts),
                },
            }
            if det.mask_pixels is not None:
                det_doc["mask_pixels"] = det.mask_pixels.astype(int).tolist()
            detections.append(det_doc)
        rec_doc: dict = {
            "prompt_id": rec.prompt_id,
            "seed": rec.seed,
            "image_width": rec.image_width,
            "image_height": rec.image_height,
            "detections": detections,
        }
        if rec.image_path is not None:
            rec_doc["image_path"] = rec.image_path
        if rec.pixel_source is not None:
            rec_doc["pixel_source"] = rec.pixel_source
        records.append(rec_doc)
    return {
        "schema_id": RESULTS_SCHEMA_ID,
        "dataset_ref": results.dataset_ref,
        "model_name": results.model_name,
        "detector_meta": dict(results.detector_meta),
        "records": records,
    }


def save_results(results: ResultsFile, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(results_to_dict(results), indent=2) + "\n")
