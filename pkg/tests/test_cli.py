"""End-to-end command-line pipeline: generate, validate, score, report, mds, seeds."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from tiam import load_dataset
from tiam.cli import main
from tiam.config import RunConfig
from tiam.prompts import (
    dataset_to_dict,
    generate_dataset,
    load_template,
    template_to_dict,
)

from corpus_helpers import presence_record, write_results_file
from test_scoring import plain_pair_template


@pytest.fixture()
def workspace(tmp_path):
    """Template + dataset + a complete 4-seed results file on disk."""
    template = plain_pair_template(labels=("lion", "bear", "cat"))
    template_path = tmp_path / "template.json"
    template_path.write_text(json.dumps(template_to_dict(template)), encoding="utf-8")

    dataset = generate_dataset(template)
    dataset_path = tmp_path / "dataset.json"
    dataset_path.write_text(json.dumps(dataset_to_dict(dataset)), encoding="utf-8")

    rng = np.random.default_rng(13)
    records = []
    for instance in dataset.prompts:
        for seed in range(4):
            present = [bool(rng.random() < 0.8), bool(rng.random() < 0.6)]
            records.append(presence_record(instance, seed, present))
    results_path = tmp_path / "results.json"
    write_results_file(results_path, records)
    return tmp_path, template_path, dataset_path, results_path


def run(*argv) -> int:
    return main([str(a) for a in argv])


class TestGenerate:
    def test_dataset_written_with_count_header(self, workspace):
        tmp_path, template_path, _, _ = workspace
        out = tmp_path / "generated.json"
        assert run("generate", "--template", template_path, "--out", out) == 0
        doc = json.loads(out.read_text())
        assert doc["count"] == len(doc["prompts"]) == 6
        dataset = load_dataset(out)
        assert dataset.count == 6

    def test_shipped_24_label_template(self, tmp_path):
        out = tmp_path / "pairs24.json"
        assert run(
            "generate",
            "--template", "src/tiam/data/templates/coco_pairs_24.json",
            "--out", out,
        ) == 0
        doc = json.loads(out.read_text())
        assert doc["count"] == len(doc["prompts"]) == 552

    def test_template_error_exits_1(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"schema_id": "tiam-template-v1"}), encoding="utf-8")
        assert run("generate", "--template", bad, "--out", tmp_path / "x.json") == 1

    def test_missing_file_exits_2(self, tmp_path):
        assert run("generate", "--template", tmp_path / "nope.json", "--out", tmp_path / "x.json") == 2


class TestValidateAndScore:
    def test_validate_complete_corpus(self, workspace, capsys):
        _, _, dataset_path, results_path = workspace
        code = run(
            "validate", "--dataset", dataset_path, "--results", results_path,
            "--min-images-per-prompt", 4,
        )
        captured = capsys.readouterr()
        assert code == 0
        assert "0 warnings" in captured.out
        assert "warning" not in captured.err

    def test_validate_warns_on_undersampled(self, workspace, capsys):
        _, _, dataset_path, results_path = workspace
        code = run("validate", "--dataset", dataset_path, "--results", results_path)
        captured = capsys.readouterr()
        assert code == 0  # warnings, not errors
        assert "below the minimum of 32" in captured.err

    def test_score_writes_outcomes_and_coverage(self, workspace, capsys):
        tmp_path, _, dataset_path, results_path = workspace
        out_dir = tmp_path / "out"
        code = run(
            "score", "--dataset", dataset_path, "--results", results_path,
            "--out-dir", out_dir, "--min-images-per-prompt", 4,
        )
        assert code == 0
        outcomes = (out_dir / "outcomes.jsonl").read_text().splitlines()
        assert len(outcomes) == 24
        coverage = json.loads((out_dir / "coverage.json").read_text())
        assert coverage["n_records"] == coverage["n_outcomes"] == 24
        assert coverage["missing"] == []
        assert coverage["undersampled"] == []
        meta = json.loads((out_dir / "run_meta.json").read_text())
        assert meta["model_name"] == "stub-model"
        assert meta["confidence_threshold"] == 0.25

    def test_score_warns_and_names_undersampled_prompt(self, workspace, capsys):
        tmp_path, _, dataset_path, results_path = workspace
        dataset = load_dataset(dataset_path)
        doc = json.loads(results_path.read_text())
        victim = doc["records"][0]["prompt_id"]
        doc["records"] = [
            r for r in doc["records"] if not (r["prompt_id"] == victim and r["seed"] > 1)
        ]
        results_path.write_text(json.dumps(doc), encoding="utf-8")
        code = run(
            "score", "--dataset", dataset_path, "--results", results_path,
            "--out-dir", tmp_path / "out", "--min-images-per-prompt", 4,
        )
        captured = capsys.readouterr()
        assert code == 0
        assert victim in captured.err

    def test_corrupt_results_exit_1(self, workspace):
        tmp_path, _, dataset_path, results_path = workspace
        doc = json.loads(results_path.read_text())
        doc["records"][0]["detections"] = [
            {
                "label": "lion",
                "confidence": 2.0,
                "bbox": [0, 0, 1, 1],
                "mask": {"size": [64, 64], "counts": [0, 64 * 64]},
            }
        ]
        results_path.write_text(json.dumps(doc), encoding="utf-8")
        assert run(
            "score", "--dataset", dataset_path, "--results", results_path,
            "--out-dir", tmp_path / "out",
        ) == 1


class TestReportMdsSeeds:
    def scored(self, workspace):
        tmp_path, _, dataset_path, results_path = workspace
        out_dir = tmp_path / "out"
        assert run(
            "score", "--dataset", dataset_path, "--results", results_path,
            "--out-dir", out_dir, "--min-images-per-prompt", 4,
        ) == 0
        return tmp_path, dataset_path, out_dir

    def test_report_files(self, workspace):
        _, dataset_path, out_dir = self.scored(workspace)
        assert run(
            "report", "--dataset", dataset_path,
            "--outcomes", out_dir / "outcomes.jsonl", "--out-dir", out_dir,
        ) == 0
        report = json.loads((out_dir / "report.json").read_text())
        assert 0.0 <= report["global_tiam"] <= 1.0
        table1 = (out_dir / "table_1.csv").read_text().splitlines()
        assert table1[1] == "model,n_objects,tiam,n_outcomes"
        assert table1[2].startswith("stub-model,2,")
        for name in (
            "table_2.csv", "per_seed_boxplot.csv", "occurrence_positions.csv",
            "binding_rates.csv", "convergence.csv", "per_color_object.csv",
        ):
            assert (out_dir / name).exists(), name

    def test_mds_files(self, workspace):
        _, dataset_path, out_dir = self.scored(workspace)
        assert run(
            "mds", "--dataset", dataset_path,
            "--outcomes", out_dir / "outcomes.jsonl", "--out-dir", out_dir,
        ) == 0
        lines = (out_dir / "mds_embedding.csv").read_text().splitlines()
        assert lines[0] == "label,axis_1,axis_2"
        assert len(lines) == 4  # 3 labels
        float((out_dir / "mds_stress.txt").read_text())
        matrix = (out_dir / "mds_dissimilarity.csv").read_text().splitlines()
        assert matrix[0] == "label,lion,bear,cat"

    def test_mds_external_correlation(self, workspace):
        _, dataset_path, out_dir = self.scored(workspace)
        external = out_dir / "external.csv"
        run(
            "mds", "--dataset", dataset_path,
            "--outcomes", out_dir / "outcomes.jsonl", "--out-dir", out_dir,
        )
        # correlate the matrix with itself via the external-file path
        (out_dir / "mds_dissimilarity.csv").replace(external)
        assert run(
            "mds", "--dataset", dataset_path,
            "--outcomes", out_dir / "outcomes.jsonl", "--out-dir", out_dir,
            "--external-distances", external,
        ) == 0
        assert float((out_dir / "mds_correlation.txt").read_text()) == pytest.approx(1.0)

    def test_seeds_selection(self, workspace):
        _, dataset_path, out_dir = self.scored(workspace)
        assert run(
            "seeds", "--outcomes", out_dir / "outcomes.jsonl",
            "--out-dir", out_dir, "-k", "2",
        ) == 0
        best = (out_dir / "seeds_best.txt").read_text().split()
        worst = (out_dir / "seeds_worst.txt").read_text().split()
        assert len(best) == len(worst) == 2

    def test_empty_outcomes_exit_1(self, workspace, tmp_path):
        _, _, dataset_path, _ = workspace
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        assert run(
            "report", "--dataset", dataset_path, "--outcomes", empty,
            "--out-dir", tmp_path / "out",
        ) == 1


class TestConfig:
    def test_defaults_match_published_values(self):
        config = RunConfig()
        assert config.confidence_threshold == 0.25
        assert config.dedup_iou == 0.95
        assert config.binding_threshold == 0.40
        assert config.min_images_per_prompt == 32

    def test_precedence_flags_over_file_over_defaults(self, workspace):
        tmp_path, _, dataset_path, results_path = workspace
        cfg = tmp_path / "config.json"
        cfg.write_text(
            json.dumps({"confidence_threshold": 0.5, "min_images_per_prompt": 2}),
            encoding="utf-8",
        )
        out_dir = tmp_path / "out"
        assert run(
            "score", "--dataset", dataset_path, "--results", results_path,
            "--out-dir", out_dir, "--config", cfg, "--confidence-threshold", "0.3",
        ) == 0
        meta = json.loads((out_dir / "run_meta.json").read_text())
        assert meta["confidence_threshold"] == 0.3  # flag wins
        assert meta["min_images_per_prompt"] == 2  # file beats default
        assert meta["dedup_iou"] == 0.95  # default

    def test_out_of_range_threshold_rejected(self, workspace):
        tmp_path, _, dataset_path, results_path = workspace
        assert run(
            "score", "--dataset", dataset_path, "--results", results_path,
            "--out-dir", tmp_path / "out", "--confidence-threshold", "1.5",
        ) == 1

    def test_unknown_config_field_rejected(self, workspace):
        tmp_path, _, dataset_path, results_path = workspace
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"bogus": 1}), encoding="utf-8")
        assert run(
            "score", "--dataset", dataset_path, "--results", results_path,
            "--out-dir", tmp_path / "out", "--config", cfg,
        ) == 1


class TestDeterminism:
    def test_two_runs_byte_identical(self, workspace):
        tmp_path, _, dataset_path, results_path = workspace
        trees = []
        for name in ("run_a", "run_b"):
            out_dir = tmp_path / name
            assert run(
                "score", "--dataset", dataset_path, "--results", results_path,
                "--out-dir", out_dir, "--min-images-per-prompt", 4,
            ) == 0
            assert run(
                "report", "--dataset", dataset_path,
                "--outcomes", out_dir / "outcomes.jsonl", "--out-dir", out_dir,
            ) == 0
            assert run(
                "mds", "--dataset", dataset_path,
                "--outcomes", out_dir / "outcomes.jsonl", "--out-dir", out_dir,
            ) == 0
            assert run(
                "seeds", "--outcomes", out_dir / "outcomes.jsonl",
                "--out-dir", out_dir, "-k", "1",
            ) == 0
            trees.append(out_dir)
        a, b = trees
        files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel
