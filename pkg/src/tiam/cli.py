"""Command-line front door for the full evaluation pipeline.

Subcommands: generate, validate, score, report, mds, seeds. Exit codes: 0
on success, 1 on validation failure, 2 on I/O failure. The only environment
variable read is TIAM_VERBOSE (nonempty and not "0" enables progress notes
on stderr); everything else comes from flags, an optional JSON config file,
and built-in defaults, in that precedence order.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analytics, embedding, prompts, records, scoring
from .colors import default_palette, load_palette
from .config import RunConfig, load_config_file, resolve_config
from .errors import TiamError
from .fileio import atomic_write_text

_RUN_META_NAME = "run_meta.json"


def _verbose() -> bool:
    value = os.environ.get("TIAM_VERBOSE", "")
    return bool(value) and value != "0"


def _note(message: str) -> None:
    if _verbose():
        print(message, file=sys.stderr)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _palette(config: RunConfig):
    if config.palette_path:
        return load_palette(config.palette_path)
    return default_palette()


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else None
    flag_values = {
        "template_path": getattr(args, "template", None),
        "dataset_path": getattr(args, "dataset", None),
        "results_path": getattr(args, "results", None),
        "output_dir": getattr(args, "out_dir", None),
        "confidence_threshold": getattr(args, "confidence_threshold", None),
        "dedup_iou": getattr(args, "dedup_iou", None),
        "binding_threshold": getattr(args, "binding_threshold", None),
        "min_images_per_prompt": getattr(args, "min_images_per_prompt", None),
        "palette_path": getattr(args, "palette", None),
    }
    return resolve_config(flag_values, file_values)


def _require_path(value: str | None, what: str) -> str:
    if not value:
        raise TiamError(f"missing required input: {what}")
    return value


def cmd_generate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    template = prompts.load_template(_require_path(config.template_path, "--template"))
    dataset = prompts.generate_dataset(template)
    out = Path(args.out)
    atomic_write_text(out, json.dumps(prompts.dataset_to_dict(dataset), indent=2) + "\n")
    _note(f"wrote {len(dataset.prompts)} prompts to {out}")
    print(f"{out}: {len(dataset.prompts)} prompts (count header {dataset.count})")
    return 0


def _undersampled(coverage: scoring.CoverageSummary, minimum: int) -> list[tuple[str, int]]:
    return [
        (pid, n)
        for pid, n in sorted(coverage.records_per_prompt.items())
        if n < minimum
    ]


def cmd_validate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    dataset = prompts.load_dataset(_require_path(config.dataset_path, "--dataset"))
    results = records.load_results(
        _require_path(config.results_path, "--results"), dataset.by_id
    )
    counts: dict[str, int] = {p.prompt_id: 0 for p in dataset.prompts}
    for record in results.records:
        counts[record.prompt_id] += 1
    n_warnings = 0
    for pid, n in sorted(counts.items()):
        if n < config.min_images_per_prompt:
            _warn(
                f"prompt {pid} has {n} images, below the minimum of "
                f"{config.min_images_per_prompt}"
            )
            n_warnings += 1
    print(
        f"valid: {len(results.records)} records, {len(dataset.prompts)} prompts, "
        f"{n_warnings} warnings"
    )
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    dataset = prompts.load_dataset(_require_path(config.dataset_path, "--dataset"))
    results = records.load_results(
        _require_path(config.results_path, "--results"), dataset.by_id
    )
    palette = _palette(config)
    _note(f"scoring {len(results.records)} records")
    prepared = [
        records.dedup_overlaps(
            records.filter_confidence(record, config.confidence_threshold),
            config.dedup_iou,
        )
        for record in results.records
    ]
    outcomes, coverage = scoring.score_corpus(
        dataset, prepared, palette, config.binding_threshold
    )
    if coverage.n_outcomes != coverage.n_records:
        raise TiamError(
            f"internal accounting error: {coverage.n_records} records in, "
            f"{coverage.n_outcomes} outcomes out"
        )
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scoring.write_outcomes(outcomes, out_dir / "outcomes.jsonl")

    under = _undersampled(coverage, config.min_images_per_prompt)
    for pid, n in under:
        _warn(
            f"prompt {pid} has {n} images, below the minimum of "
            f"{config.min_images_per_prompt}"
        )
    coverage_doc = coverage.to_dict()
    coverage_doc["min_images_per_prompt"] = config.min_images_per_prompt
    coverage_doc["undersampled"] = [[pid, n] for pid, n in under]
    atomic_write_text(out_dir / "coverage.json", json.dumps(coverage_doc, indent=2) + "\n")

    meta = {
        "dataset_ref": results.dataset_ref,
        "model_name": results.model_name,
        "detector_meta": dict(sorted(results.detector_meta.items())),
        "confidence_threshold": config.confidence_threshold,
        "dedup_iou": config.dedup_iou,
        "binding_threshold": config.binding_threshold,
        "min_images_per_prompt": config.min_images_per_prompt,
    }
    atomic_write_text(out_dir / _RUN_META_NAME, json.dumps(meta, indent=2) + "\n")
    print(
        f"{out_dir / 'outcomes.jsonl'}: {len(outcomes)} outcomes, "
        f"{len(coverage.missing)} missing combinations, {len(under)} warnings"
    )
    return 0


def _load_outcomes_arg(args: argparse.Namespace) -> list[scoring.Outcome]:
    outcomes = scoring.read_outcomes(args.outcomes)
    if not outcomes:
        raise TiamError(f"{args.outcomes}: empty outcome stream")
    return outcomes


def cmd_report(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    dataset = prompts.load_dataset(_require_path(config.dataset_path, "--dataset"))
    outcomes = _load_outcomes_arg(args)
    model_name = "unknown"
    meta_path = Path(config.output_dir) / _RUN_META_NAME
    if meta_path.exists():
        model_name = json.loads(meta_path.read_text("utf-8")).get("model_name", "unknown")
    report = analytics.build_report(outcomes, dataset)
    written = analytics.write_report_files(
        report, outcomes, config.output_dir, model_name=model_name
    )
    print(f"wrote {len(written)} report files to {config.output_dir}")
    return 0


def _per_pair_rates(
    dataset: prompts.PromptDataset, outcomes: list[scoring.Outcome]
) -> dict[tuple[str, str], float]:
    if dataset.n_positions != 2:
        raise TiamError("the MDS projection needs a two-object template")
    rates = analytics.per_prompt_tiam(outcomes)
    pair_values: dict[tuple[str, str], list[float]] = {}
    for prompt in dataset.prompts:
        if prompt.prompt_id not in rates:
            continue
        pair = (prompt.ground_truth[0][1], prompt.ground_truth[1][1])
        pair_values.setdefault(pair, []).append(rates[prompt.prompt_id])
    return {pair: sum(vs) / len(vs) for pair, vs in pair_values.items()}


def cmd_mds(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    dataset = prompts.load_dataset(_require_path(config.dataset_path, "--dataset"))
    outcomes = _load_outcomes_arg(args)
    per_pair = _per_pair_rates(dataset, outcomes)
    labels = dataset.template.object_sets[0].labels
    matrix = embedding.build_dissimilarity(per_pair, labels)
    projection = embedding.classical_mds(matrix, dim=2)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    embedding.write_matrix_csv(matrix, out_dir / "mds_dissimilarity.csv")
    embedding.write_embedding_csv(projection, out_dir / "mds_embedding.csv")
    atomic_write_text(out_dir / "mds_stress.txt", f"{projection.stress!r}\n")
    if projection.deficient:
        _warn(f"embedding used {projection.n_axes} positive axes out of 2 requested")
    if args.external_distances:
        external = embedding.read_matrix_csv(args.external_distances)
        r = embedding.correlate(matrix, external)
        atomic_write_text(out_dir / "mds_correlation.txt", f"{r!r}\n")
    print(f"wrote MDS files to {out_dir} (stress {projection.stress:.6f})")
    return 0


def cmd_seeds(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    outcomes = _load_outcomes_arg(args)
    profiles = analytics.per_seed_tiam(outcomes)
    selection = analytics.select_seeds(profiles, args.k)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in ("best", "worst"):
        atomic_write_text(
            out_dir / f"seeds_{name}.txt",
            "".join(f"{seed}\n" for seed in selection[name]),
        )
    print(
        f"wrote seeds_best.txt and seeds_worst.txt to {out_dir} "
        f"(k={args.k} of {len(profiles)} seeds)"
    )
    return 0


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--out-dir", help="output directory (default tiam-out)")
    parser.add_argument("--confidence-threshold", type=float, default=None)
    parser.add_argument("--dedup-iou", type=float, default=None)
    parser.add_argument("--binding-threshold", type=float, default=None)
    parser.add_argument("--min-images-per-prompt", type=int, default=None)
    parser.add_argument("--palette", help="palette JSON (default: shipped palette)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiam",
        description="Generate prompt datasets, score detection results, aggregate analyses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="render every prompt of a template")
    p.add_argument("--template", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check a results file against its dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--results", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", help="filter, dedup, and score a results file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--results", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="aggregate an outcome stream into tables")
    p.add_argument("--dataset", required=True)
    p.add_argument("--outcomes", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("mds", help="dissimilarity matrix and 2D projection")
    p.add_argument("--dataset", required=True)
    p.add_argument("--outcomes", required=True)
    p.add_argument("--external-distances", help="external distance matrix CSV to correlate")
    _add_config_flags(p)
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("seeds", help="select best/worst seeds by alignment rate")
    p.add_argument("--outcomes", required=True)
    p.add_argument("-k", type=int, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_seeds)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TiamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
