"""Adapter command line: run a generator+detector pair over a dataset.

``tiam-adapter run`` reads a prompt dataset file, generates one image per
(prompt, seed), runs detection, and writes a results file conforming to
the scoring toolkit's schema. ``tiam-adapter init-config`` writes a default
config file to edit. Exit codes: 0 success, 1 config/dataset failure, 2
I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import AdapterConfig, AdapterConfigError, load_config
from .harness import DatasetError, load_prompts, run_detection, run_generation
from .stubs import StubDetector, StubGenerator

GENERATORS = {"stub-generator": StubGenerator}
DETECTORS = {"stub-detector": StubDetector}


def _build_generator(config: AdapterConfig):
    try:
        factory = GENERATORS[config.generator_id]
    except KeyError:
        raise AdapterConfigError(
            f"unknown generator_id {config.generator_id!r}; integrate real models "
            f"through the Python API (tiam_adapter.harness)"
        ) from None
    return factory(config)


def _build_detector(config: AdapterConfig):
    try:
        factory = DETECTORS[config.detector_id]
    except KeyError:
        raise AdapterConfigError(
            f"unknown detector_id {config.detector_id!r}; integrate real detectors "
            f"through the Python API (tiam_adapter.harness)"
        ) from None
    return factory()


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else AdapterConfig()
    dataset_ref, prompts = load_prompts(args.dataset)
    generator = _build_generator(config)
    detector = _build_detector(config)
    items, generation_failures = run_generation(prompts, config, generator, args.images_dir)
    n_records, detection_failures = run_detection(
        items, config, detector, args.out, dataset_ref
    )
    for failure in generation_failures + detection_failures:
        print(
            f"warning: {failure.stage} failed for ({failure.prompt_id}, seed "
            f"{failure.seed}): {failure.error}",
            file=sys.stderr,
        )
    print(
        f"{args.out}: {n_records} records from {len(prompts)} prompts x "
        f"{len(config.seeds)} seeds ({len(generation_failures) + len(detection_failures)}"
        f" failures)"
    )
    return 0


def cmd_init_config(args: argparse.Namespace) -> int:
    config = AdapterConfig()
    doc = {
        "generator_id": config.generator_id,
        "generation_params": dict(config.generation_params),
        "detector_id": config.detector_id,
        "detector_params": dict(config.detector_params),
        "seeds": list(config.seeds),
        "image_size": config.image_size,
    }
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiam-adapter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="generate images and emit a results file")
    p.add_argument("--dataset", required=True, help="prompt dataset JSON")
    p.add_argument("--out", required=True, help="results file to write")
    p.add_argument("--images-dir", required=True, help="directory for generated images")
    p.add_argument("--config", help="adapter config JSON (defaults when omitted)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("init-config", help="write the default config file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AdapterConfigError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
