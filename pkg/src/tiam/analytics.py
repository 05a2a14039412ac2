"""Aggregate statistics over outcome streams.

Everything here is a deterministic reduction of per-image outcomes: the
global alignment rate, per-prompt and per-seed rates (with standardized
scores and ranks), per-slot occurrence, binding success rates among
detected objects, sample-size convergence curves, and best/worst seed
selection. Undefined ratios (zero denominators) are reported as None,
never as 0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError
from .fileio import atomic_write_text
from .prompts import PromptDataset
from .scoring import Outcome

__all__ = [
    "SeedProfile",
    "BindingRates",
    "TiamReport",
    "compute_tiam",
    "per_prompt_tiam",
    "per_seed_tiam",
    "occurrence_by_position",
    "binding_success_rate",
    "convergence_curve",
    "select_seeds",
    "build_report",
    "write_report_files",
]


@dataclass(frozen=True)
class SeedProfile:
    """One seed's pooled alignment rate, standardized score, and rank."""

    seed: int
    raw_tiam: float
    z_score: float | None
    rank: int
    n_outcomes: int


@dataclass(frozen=True)
class BindingRates:
    """Correctly-bound proportions among detected objects, by slice.

    Keys: slot position (1-based), attribute color, object label, and
    (position, color). Values are None when nothing was detected in the
    slice. ``counts`` maps the same keys to (bound, detected) pairs.
    """

    per_position: tuple[float | None, ...]
    per_color: Mapping[str, float | None]
    per_object: Mapping[str, float | None]
    per_position_color: Mapping[tuple[int, str], float | None]
    counts: Mapping[str, tuple[int, int]]


@dataclass(frozen=True)
class TiamReport:
    """Every aggregate the reporting pipeline emits, in one place."""

    global_tiam: float
    per_prompt: Mapping[str, float]
    per_seed: tuple[SeedProfile, ...]
    per_position_occurrence: tuple[float, ...]
    binding: BindingRates | None
    per_color_object: Mapping[tuple[str, str], float]
    n_images_per_prompt: int
    n_outcomes: int
    n_objects: int
    seed_summary: Mapping[str, float] | None

    def to_dict(self) -> dict:
        return {
            "global_tiam": self.global_tiam,
            "n_outcomes": self.n_outcomes,
            "n_objects": self.n_objects,
            "n_images_per_prompt": self.n_images_per_prompt,
            "per_prompt": dict(sorted(self.per_prompt.items())),
            "per_seed": [
                {
                    "seed": p.seed,
                    "tiam": p.raw_tiam,
                    "z_score": p.z_score,
                    "rank": p.rank,
                    "n_outcomes": p.n_outcomes,
                }
                for p in self.per_seed
            ],
            "seed_summary": dict(self.seed_summary) if self.seed_summary else None,
            "per_position_occurrence": list(self.per_position_occurrence),
            "binding": None
            if self.binding is None
            else {
                "per_position": list(self.binding.per_position),
                "per_color": dict(sorted(self.binding.per_color.items())),
                "per_object": dict(sorted(self.binding.per_object.items())),
                "per_position_color": {
                    f"{pos}|{color}": rate
                    for (pos, color), rate in sorted(self.binding.per_position_color.items())
                },
                "counts": dict(sorted(self.binding.counts.items())),
            },
            "per_color_object": {
                f"{color}|{obj}": rate
                for (color, obj), rate in sorted(self.per_color_object.items())
            },
        }


def compute_tiam(outcomes: Sequence[Outcome]) -> float:
    """Mean success over all outcomes."""
    if not outcomes:
        raise DataError("cannot compute an alignment rate over zero outcomes")
    return sum(o.success for o in outcomes) / len(outcomes)


def per_prompt_tiam(outcomes: Sequence[Outcome]) -> dict[str, float]:
    groups: dict[str, list[int]] = {}
    for o in outcomes:
        groups.setdefault(o.prompt_id, []).append(o.success)
    return {pid: sum(bits) / len(bits) for pid, bits in groups.items()}


def per_seed_tiam(outcomes: Sequence[Outcome]) -> list[SeedProfile]:
    """Pool all outcomes per seed; attach standardized scores and ranks.

    Standardization uses the population standard deviation across seeds, so
    the z-scores have exactly zero mean and unit variance. With one seed or
    zero variance, z-scores are absent. Ranks are 1-based, descending by
    raw rate, ties broken by ascending seed id.
    """
    if not outcomes:
        raise DataError("cannot aggregate zero outcomes per seed")
    groups: dict[int, list[int]] = {}
    for o in outcomes:
        groups.setdefault(o.seed, []).append(o.success)
    raw = {seed: sum(bits) / len(bits) for seed, bits in groups.items()}
    seeds = sorted(raw)
    mean = sum(raw.values()) / len(raw)
    variance = sum((v - mean) ** 2 for v in raw.values()) / len(raw)
    std = math.sqrt(variance)
    ranked = sorted(seeds, key=lambda s: (-raw[s], s))
    rank_of = {seed: i + 1 for i, seed in enumerate(ranked)}
    return [
        SeedProfile(
            seed=seed,
            raw_tiam=raw[seed],
            z_score=(raw[seed] - mean) / std if len(seeds) > 1 and std > 0 else None,
            rank=rank_of[seed],
            n_outcomes=len(groups[seed]),
        )
        for seed in seeds
    ]


def occurrence_by_position(outcomes: Sequence[Outcome]) -> list[float]:
    """Fraction of outcomes with the slot's object detected, per slot."""
    if not outcomes:
        raise DataError("cannot compute occurrence over zero outcomes")
    n = len(outcomes[0].position_presence)
    if any(len(o.position_presence) != n for o in outcomes):
        raise DataError("outcomes mix templates with different slot counts")
    return [
        sum(o.position_presence[i] for o in outcomes) / len(outcomes) for i in range(n)
    ]


GroundTruth = Mapping[str, Sequence[tuple[int, str, "str | None"]]]


def binding_success_rate(
    outcomes: Sequence[Outcome],
    ground_truth: GroundTruth | None = None,
) -> BindingRates:
    """Correctly-bound rate among detected objects, per slot and per slice.

    Per-color / per-object / per-(position, color) slices need the prompts'
    expected content (``ground_truth``: prompt_id -> slot triples); without
    it only the per-position rates are computed.
    """
    if not outcomes:
        raise DataError("cannot compute binding rates over zero outcomes")
    n = len(outcomes[0].position_presence)
    if all(b is None for o in outcomes for b in o.position_binding):
        raise DataError("binding rates need an attributed template")

    pos_bound = [0] * n
    pos_detected = [0] * n
    color_counts: dict[str, list[int]] = {}
    object_counts: dict[str, list[int]] = {}
    pos_color_counts: dict[tuple[int, str], list[int]] = {}

    for o in outcomes:
        gt = ground_truth.get(o.prompt_id) if ground_truth is not None else None
        for i in range(n):
            if o.position_binding[i] is None:
                continue
            detected = o.position_presence[i]
            bound = bool(o.position_binding[i])
            if detected:
                pos_detected[i] += 1
                pos_bound[i] += bound
            if gt is not None:
                _, obj, attr = gt[i]
                if attr is None:
                    continue
                for key, table in (
                    (attr, color_counts),
                    (obj, object_counts),
                ):
                    cell = table.setdefault(key, [0, 0])
                    if detected:
                        cell[1] += 1
                        cell[0] += bound
                cell = pos_color_counts.setdefault((i + 1, attr), [0, 0])
                if detected:
                    cell[1] += 1
                    cell[0] += bound

    def rate(bound: int, detected: int) -> float | None:
        return bound / detected if detected else None

    counts: dict[str, tuple[int, int]] = {}
    for i in range(n):
        counts[f"position:{i + 1}"] = (pos_bound[i], pos_detected[i])
    for color, (b, d) in sorted(color_counts.items()):
        counts[f"color:{color}"] = (b, d)
    for obj, (b, d) in sorted(object_counts.items()):
        counts[f"object:{obj}"] = (b, d)
    for (pos, color), (b, d) in sorted(pos_color_counts.items()):
        counts[f"position_color:{pos}|{color}"] = (b, d)

    return BindingRates(
        per_position=tuple(rate(pos_bound[i], pos_detected[i]) for i in range(n)),
        per_color={c: rate(b, d) for c, (b, d) in color_counts.items()},
        per_object={obj: rate(b, d) for obj, (b, d) in object_counts.items()},
        per_position_color={k: rate(b, d) for k, (b, d) in pos_color_counts.items()},
        counts=counts,
    )


def convergence_curve(outcomes: Sequence[Outcome], max_n: int) -> list[tuple[int, float]]:
    """Alignment rate over the first n seeds per prompt, for n = 1..max_n.

    Seed order is ascending seed id within each prompt. Every prompt must
    carry at least ``max_n`` seeds.
    """
    if max_n < 1:
        raise DataError(f"max_n must be >= 1, got {max_n}")
    per_prompt: dict[str, list[Outcome]] = {}
    for o in outcomes:
        per_prompt.setdefault(o.prompt_id, []).append(o)
    for pid, rows in per_prompt.items():
        if len({o.seed for o in rows}) < max_n:
            raise DataError(f"prompt {pid} has fewer than {max_n} seeds")
        rows.sort(key=lambda o: o.seed)
    curve = []
    for n in range(1, max_n + 1):
        bits = [o.success for rows in per_prompt.values() for o in rows[:n]]
        curve.append((n, sum(bits) / len(bits)))
    return curve


def select_seeds(profiles: Sequence[SeedProfile], k: int) -> dict[str, list[int]]:
    """Top-k and bottom-k seeds by rank."""
    if not 1 <= k <= len(profiles):
        raise DataError(f"k must be in 1..{len(profiles)}, got {k}")
    by_rank = sorted(profiles, key=lambda p: p.rank)
    return {
        "best": [p.seed for p in by_rank[:k]],
        "worst": [p.seed for p in reversed(by_rank[-k:])],
    }


def _quantiles(values: Sequence[float]) -> dict[str, float]:
    """min/q1/median/q3/max/mean with linear interpolation quartiles."""
    data = sorted(values)
    n = len(data)

    def q(p: float) -> float:
        pos = p * (n - 1)
        lo = math.floor(pos)
        hi = math.ceil(pos)
        return data[lo] + (data[hi] - data[lo]) * (pos - lo)

    return {
        "min": data[0],
        "q1": q(0.25),
        "median": q(0.5),
        "q3": q(0.75),
        "max": data[-1],
        "mean": sum(data) / n,
    }


def build_report(outcomes: Sequence[Outcome], dataset: PromptDataset) -> TiamReport:
    """Assemble every aggregate for one scored corpus."""
    if not outcomes:
        raise DataError("cannot build a report over zero outcomes")
    gt = {p.prompt_id: p.ground_truth for p in dataset.prompts}
    for o in outcomes:
        if o.prompt_id not in gt:
            raise DataError(f"outcome prompt_id {o.prompt_id!r} not in dataset")

    attributed = dataset.template.attributed
    binding = binding_success_rate(outcomes, gt) if attributed else None

    per_color_object: dict[tuple[str, str], list[int]] = {}
    if attributed:
        for o in outcomes:
            for _, obj, attr in gt[o.prompt_id]:
                if attr is None:
                    continue
                cell = per_color_object.setdefault((attr, obj), [0, 0])
                cell[0] += o.success
                cell[1] += 1

    profiles = per_seed_tiam(outcomes)
    counts = {}
    for o in outcomes:
        counts[o.prompt_id] = counts.get(o.prompt_id, 0) + 1

    return TiamReport(
        global_tiam=compute_tiam(outcomes),
        per_prompt=per_prompt_tiam(outcomes),
        per_seed=tuple(profiles),
        per_position_occurrence=tuple(occurrence_by_position(outcomes)),
        binding=binding,
        per_color_object={k: b / n for k, (b, n) in per_color_object.items()},
        n_images_per_prompt=min(counts.values()),
        n_outcomes=len(outcomes),
        n_objects=dataset.n_positions,
        seed_summary=_quantiles([p.raw_tiam for p in profiles]),
    )


# --- CSV emission -------------------------------------------------------------


def _fmt(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    return repr(value) if isinstance(value, float) else str(value)


def _csv(comment: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_report_files(
    report: TiamReport,
    outcomes: Sequence[Outcome],
    out_dir: str | Path,
    model_name: str = "unknown",
    convergence_max_n: int | None = None,
) -> list[Path]:
    """Emit the report as report.json plus one flat CSV per analysis."""
    import json

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name: str, text: str) -> None:
        written.append(atomic_write_text(out_dir / name, text))

    emit("report.json", json.dumps(report.to_dict(), indent=2) + "\n")

    emit(
        "table_1.csv",
        _csv(
            "table_1: alignment rate by number of objects in the prompt",
            ["model", "n_objects", "tiam", "n_outcomes"],
            [[model_name, report.n_objects, report.global_tiam, report.n_outcomes]],
        ),
    )
    occurrence_rows = [
        [i + 1, rate] for i, rate in enumerate(report.per_position_occurrence)
    ]
    emit(
        "table_2.csv",
        _csv(
            "table_2: object occurrence by slot position",
            ["position", "occurrence"],
            occurrence_rows,
        ),
    )
    emit(
        "occurrence_positions.csv",
        _csv(
            "occurrence_positions: object occurrence by slot position",
            ["position", "occurrence", "n_outcomes"],
            [[i + 1, rate, report.n_outcomes] for i, rate in enumerate(report.per_position_occurrence)],
        ),
    )
    emit(
        "per_seed_boxplot.csv",
        _csv(
            "per_seed_boxplot: pooled alignment rate per seed",
            ["seed", "tiam", "z_score", "rank", "n_outcomes"],
            [
                [p.seed, p.raw_tiam, p.z_score, p.rank, p.n_outcomes]
                for p in report.per_seed
            ],
        ),
    )

    binding_rows: list[list] = []
    if report.binding is not None:
        for i, rate in enumerate(report.binding.per_position):
            b, d = report.binding.counts[f"position:{i + 1}"]
            binding_rows.append(["position", str(i + 1), rate, b, d])
        for color in sorted(report.binding.per_color):
            b, d = report.binding.counts[f"color:{color}"]
            binding_rows.append(["color", color, report.binding.per_color[color], b, d])
        for obj in sorted(report.binding.per_object):
            b, d = report.binding.counts[f"object:{obj}"]
            binding_rows.append(["object", obj, report.binding.per_object[obj], b, d])
        for pos, color in sorted(report.binding.per_position_color):
            b, d = report.binding.counts[f"position_color:{pos}|{color}"]
            binding_rows.append(
                ["position_color", f"{pos}|{color}", report.binding.per_position_color[(pos, color)], b, d]
            )
    emit(
        "binding_rates.csv",
        _csv(
            "binding_rates: correctly bound among detected, by slice",
            ["scope", "key", "rate", "n_bound", "n_detected"],
            binding_rows,
        ),
    )

    emit(
        "per_color_object.csv",
        _csv(
            "per_color_object: alignment rate over prompts carrying the (color, object) pair",
            ["color", "object", "tiam"],
            [
                [color, obj, rate]
                for (color, obj), rate in sorted(report.per_color_object.items())
            ],
        ),
    )

    convergence_rows: list[list] = []
    if convergence_max_n is None:
        counts = {}
        for o in outcomes:
            counts.setdefault(o.prompt_id, set()).add(o.seed)
        convergence_max_n = min(len(s) for s in counts.values())
    if convergence_max_n >= 1:
        convergence_rows = [
            [n, value] for n, value in convergence_curve(outcomes, convergence_max_n)
        ]
    emit(
        "convergence.csv",
        _csv(
            "convergence: alignment rate over the first n seeds per prompt",
            ["n", "tiam"],
            convergence_rows,
        ),
    )
    return written
