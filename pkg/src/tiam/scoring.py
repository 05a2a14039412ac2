"""Per-image alignment scoring against a prompt's expected content.

A prompt succeeds on an image when every requested object is detected and,
for slots that carry an attribute, at least one detection of that object
binds the attribute's color. Extra detections never penalize. Records must
already be confidence-filtered and overlap-deduped.

When the same label is requested at several slots, detections are assigned
to slots by maximum-cardinality matching so that one detection satisfies at
most one slot; among equally large matchings the earliest slots win, which
keeps the diagnostics deterministic and independent of detection order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .colors import BINDING_THRESHOLD_DEFAULT, ReferencePalette, check_binding, classify_pixels
from .errors import DataError
from .fileio import atomic_write_text
from .prompts import PromptDataset, PromptInstance
from .records import Detection, ImageRecord

__all__ = [
    "Outcome",
    "CoverageSummary",
    "score_image",
    "score_corpus",
    "write_outcomes",
    "read_outcomes",
]


@dataclass(frozen=True)
class Outcome:
    """Per-image result: the success bit plus per-slot diagnostics.

    ``position_binding[i]`` is None for slots without an attribute. The
    success bit always equals (all slots present) and (all defined bindings
    true). ``matched_detection_ids`` gives, per slot, the detection assigned
    to it when the slot's full requirement is met, else None.
    """

    prompt_id: str
    seed: int
    success: int
    position_presence: tuple[bool, ...]
    position_binding: tuple[bool | None, ...]
    matched_detection_ids: tuple[int | None, ...]
    audit: tuple[dict, ...] | None = None


@dataclass(frozen=True)
class CoverageSummary:
    """Which (prompt, seed) combinations a corpus actually covers."""

    n_prompts: int
    n_records: int
    n_outcomes: int
    seeds: tuple[int, ...]
    missing: tuple[tuple[str, int], ...]
    records_per_prompt: Mapping[str, int]

    @property
    def complete(self) -> bool:
        return not self.missing

    def to_dict(self) -> dict:
        return {
            "n_prompts": self.n_prompts,
            "n_records": self.n_records,
            "n_outcomes": self.n_outcomes,
            "seeds": list(self.seeds),
            "missing": [[pid, seed] for pid, seed in self.missing],
            "records_per_prompt": dict(sorted(self.records_per_prompt.items())),
        }


def _max_matching_size(candidates: Sequence[frozenset[int]]) -> int:
    """Maximum bipartite matching size: slots on one side, detections other."""
    owner: dict[int, int] = {}

    def assign(slot: int, visited: set[int]) -> bool:
        for det in sorted(candidates[slot]):
            if det in visited:
                continue
            visited.add(det)
            if det not in owner or assign(owner[det], visited):
                owner[det] = slot
                return True
        return False

    size = 0
    for slot in range(len(candidates)):
        if assign(slot, set()):
            size += 1
    return size


def _greedy_satisfied(candidates: Sequence[frozenset[int]]) -> list[bool]:
    """Earliest-slots-first maximum matchable subset (matroid greedy)."""
    chosen: list[frozenset[int]] = []
    flags: list[bool] = []
    for cand in candidates:
        if cand and _max_matching_size([*chosen, cand]) == len(chosen) + 1:
            chosen.append(cand)
            flags.append(True)
        else:
            flags.append(False)
    return flags


def _matching_assignment(candidates: Sequence[frozenset[int]]) -> list[int | None]:
    """A concrete assignment for the greedy-satisfiable slots."""
    flags = _greedy_satisfied(candidates)
    owner: dict[int, int] = {}

    def assign(slot: int, visited: set[int]) -> bool:
        for det in sorted(candidates[slot]):
            if det in visited:
                continue
            visited.add(det)
            if det not in owner or assign(owner[det], visited):
                owner[det] = slot
                return True
        return False

    order = [i for i, ok in enumerate(flags) if ok]
    for slot in order:
        assign(slot, set())
    result: list[int | None] = [None] * len(candidates)
    for det, slot in owner.items():
        result[slot] = det
    return result


def score_image(
    instance: PromptInstance,
    record: ImageRecord,
    palette: ReferencePalette,
    binding_threshold: float = BINDING_THRESHOLD_DEFAULT,
    audit: bool = False,
) -> Outcome:
    """Score one image against its prompt's expected content."""
    if record.prompt_id != instance.prompt_id:
        raise DataError(
            f"record prompt_id {record.prompt_id!r} != instance {instance.prompt_id!r}"
        )
    slots = instance.ground_truth
    detections = sorted(record.detections, key=lambda d: d.detection_id)
    by_label: dict[str, list[Detection]] = {}
    for det in detections:
        by_label.setdefault(det.label, []).append(det)

    lab_cache: dict[int, object] = {}
    binding_cache: dict[tuple[int, str], bool] = {}

    def binds(det: Detection, attr: str) -> bool:
        key = (det.detection_id, attr)
        if key not in binding_cache:
            if det.detection_id not in lab_cache:
                lab_cache[det.detection_id] = det.lab_pixels()
            verdict = check_binding(lab_cache[det.detection_id], attr, palette, binding_threshold)
            binding_cache[key] = verdict.success
        return binding_cache[key]

    n = len(slots)
    presence: list[bool] = [False] * n
    satisfied: list[bool] = [False] * n
    matched: list[int | None] = [None] * n

    groups: dict[str, list[int]] = {}
    for idx, (_, label, _) in enumerate(slots):
        groups.setdefault(label, []).append(idx)

    for label, slot_indices in groups.items():
        dets = by_label.get(label, [])
        det_ids = frozenset(d.detection_id for d in dets)
        dets_by_id = {d.detection_id: d for d in dets}
        # Presence ignores attributes: any detection of the label qualifies.
        presence_flags = _greedy_satisfied([det_ids] * len(slot_indices))
        full_candidates = []
        for idx in slot_indices:
            attr = slots[idx][2]
            if attr is None:
                full_candidates.append(det_ids)
            else:
                full_candidates.append(
                    frozenset(d.detection_id for d in dets if binds(d, attr))
                )
        assignment = _matching_assignment(full_candidates)
        for k, idx in enumerate(slot_indices):
            presence[idx] = presence_flags[k]
            satisfied[idx] = assignment[k] is not None
            matched[idx] = assignment[k]

    binding: list[bool | None] = []
    for idx, (_, _, attr) in enumerate(slots):
        if attr is None:
            binding.append(None)
        else:
            binding.append(satisfied[idx] and presence[idx])

    success = int(all(satisfied))

    audit_entries: tuple[dict, ...] | None = None
    if audit:
        entries = []
        for det in detections:
            if det.mask_pixels is None:
                continue
            if det.detection_id not in lab_cache:
                lab_cache[det.detection_id] = det.lab_pixels()
            labels = classify_pixels(lab_cache[det.detection_id], palette)
            total = labels.shape[0]
            proportions = {
                name: round(float((labels == i).sum() / total), 6)
                for i, name in enumerate(palette.names)
                if name in palette.attribute_names
            }
            entries.append(
                {
                    "detection_id": det.detection_id,
                    "label": det.label,
                    "proportions": proportions,
                }
            )
        audit_entries = tuple(entries)

    return Outcome(
        prompt_id=instance.prompt_id,
        seed=record.seed,
        success=success,
        position_presence=tuple(presence),
        position_binding=tuple(binding),
        matched_detection_ids=tuple(matched),
        audit=audit_entries,
    )


def score_corpus(
    dataset: PromptDataset,
    records: Iterable[ImageRecord],
    palette: ReferencePalette,
    binding_threshold: float = BINDING_THRESHOLD_DEFAULT,
) -> tuple[list[Outcome], CoverageSummary]:
    """Score every record and report coverage of the (prompt, seed) grid.

    The expected grid is every dataset prompt crossed with every seed seen
    anywhere in the corpus; partial corpora are legal and surface as
    ``missing`` entries.
    """
    by_id = dataset.by_id
    records = list(records)
    outcomes = []
    for record in records:
        if record.prompt_id not in by_id:
            raise DataError(f"record prompt_id {record.prompt_id!r} not in dataset")
        outcomes.append(
            score_image(by_id[record.prompt_id], record, palette, binding_threshold)
        )
    outcomes.sort(key=lambda o: (o.prompt_id, o.seed))

    seeds = tuple(sorted({r.seed for r in records}))
    covered = {(r.prompt_id, r.seed) for r in records}
    missing = tuple(
        (p.prompt_id, seed)
        for p in dataset.prompts
        for seed in seeds
        if (p.prompt_id, seed) not in covered
    )
    per_prompt: dict[str, int] = {p.prompt_id: 0 for p in dataset.prompts}
    for record in records:
        per_prompt[record.prompt_id] += 1
    coverage = CoverageSummary(
        n_prompts=len(dataset.prompts),
        n_records=len(records),
        n_outcomes=len(outcomes),
        seeds=seeds,
        missing=missing,
        records_per_prompt=per_prompt,
    )
    return outcomes, coverage


# --- outcome stream ----------------------------------------------------------


def outcome_to_dict(outcome: Outcome) -> dict:
    doc = {
        "prompt_id": outcome.prompt_id,
        "seed": outcome.seed,
        "success": outcome.success,
        "position_presence": list(outcome.position_presence),
        "position_binding": list(outcome.position_binding),
        "matched_detection_ids": list(outcome.matched_detection_ids),
    }
    if outcome.audit is not None:
        doc["audit"] = list(outcome.audit)
    return doc


def outcome_from_dict(doc: Mapping) -> Outcome:
    return Outcome(
        prompt_id=doc["prompt_id"],
        seed=int(doc["seed"]),
        success=int(doc["success"]),
        position_presence=tuple(bool(v) for v in doc["position_presence"]),
        position_binding=tuple(
            None if v is None else bool(v) for v in doc["position_binding"]
        ),
        matched_detection_ids=tuple(
            None if v is None else int(v) for v in doc["matched_detection_ids"]
        ),
        audit=tuple(doc["audit"]) if "audit" in doc else None,
    )


def write_outcomes(outcomes: Iterable[Outcome], path: str | Path) -> None:
    """Line-delimited JSON with stable field order, sorted by (prompt, seed)."""
    rows = sorted(outcomes, key=lambda o: (o.prompt_id, o.seed))
    text = "".join(json.dumps(outcome_to_dict(o)) + "\n" for o in rows)
    atomic_write_text(path, text)


def read_outcomes(path: str | Path) -> list[Outcome]:
    outcomes = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                outcomes.append(outcome_from_dict(json.loads(line)))
    return outcomes
