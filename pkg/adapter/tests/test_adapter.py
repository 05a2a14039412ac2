"""Adapter harness tests, including the core-validator round-trip.

The scoring core is exercised exclusively through its command line
(``python -m tiam.cli``) and its file schemas; nothing here imports it.
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from tiam_adapter import (
    AdapterConfig,
    AdapterConfigError,
    StubDetector,
    StubGenerator,
    load_prompts,
    run_detection,
    run_generation,
)
from tiam_adapter.cli import main as adapter_main
from tiam_adapter.config import config_from_dict
from tiam_adapter.rle import encode_mask, foreground_pixels
from tiam_adapter.stubs import RawDetection, sidecar_path

CORE = [sys.executable, "-m", "tiam.cli"]

TEMPLATE = {
    "schema_id": "tiam-template-v1",
    "name": "adapter-demo",
    "n_positions": 1,
    "text_pattern": "a photo of det(1) attr(1) obj(1)",
    "object_sets": [{"position": 1, "labels": ["car", "zebra"]}],
    "attribute_sets": [{"position": 1, "attributes": ["red", "blue"]}],
    "uniqueness_mode": "STRICT",
    "article_overrides": {},
}


def core(*argv: object) -> subprocess.CompletedProcess:
    return subprocess.run(
        CORE + [str(a) for a in argv], capture_output=True, text=True
    )


@pytest.fixture(scope="module")
def dataset_path(tmp_path_factory) -> Path:
    tmp = tmp_path_factory.mktemp("dataset")
    template_path = tmp / "template.json"
    template_path.write_text(json.dumps(TEMPLATE), encoding="utf-8")
    out = tmp / "dataset.json"
    proc = core("generate", "--template", template_path, "--out", out)
    assert proc.returncode == 0, proc.stderr
    return out


class TestGeneration:
    def test_one_image_per_prompt_seed(self, dataset_path, tmp_path):
        _, prompts = load_prompts(dataset_path)
        config = AdapterConfig(seeds=(0, 1, 2))
        items, failures = run_generation(prompts, config, StubGenerator(config), tmp_path)
        assert not failures
        assert len(items) == len(prompts) * 3 == 12
        for item in items:
            assert item.image_path.exists()
            assert item.image_path.name == f"{item.prompt_id}_seed{item.seed}.png"

    def test_rerun_is_idempotent(self, dataset_path, tmp_path):
        _, prompts = load_prompts(dataset_path)
        config = AdapterConfig(seeds=(0, 1))
        first, _ = run_generation(prompts, config, StubGenerator(config), tmp_path)
        second, _ = run_generation(prompts, config, StubGenerator(config), tmp_path)
        assert [i.image_path for i in first] == [i.image_path for i in second]

    def test_default_seed_count_is_32(self):
        assert len(AdapterConfig().seeds) == 32
        assert config_from_dict({}).seeds == tuple(range(32))

    def test_generation_failure_recorded_and_skipped(self, dataset_path, tmp_path):
        _, prompts = load_prompts(dataset_path)
        config = AdapterConfig(seeds=(0,))

        class FlakyGenerator(StubGenerator):
            def generate(self, prompt, seed):
                if prompt.prompt_id == prompts[0].prompt_id:
                    raise RuntimeError("boom")
                return super().generate(prompt, seed)

        items, failures = run_generation(
            prompts, config, FlakyGenerator(config), tmp_path
        )
        assert len(items) == len(prompts) - 1
        assert len(failures) == 1 and failures[0].stage == "generation"

    def test_config_validation(self):
        with pytest.raises(AdapterConfigError):
            AdapterConfig(seeds=())
        with pytest.raises(AdapterConfigError):
            AdapterConfig(seeds=(1, 1))
        with pytest.raises(AdapterConfigError):
            config_from_dict({"bogus": 3})


class TestDetection:
    def run_all(self, dataset_path, tmp_path, seeds=(0, 1)):
        dataset_ref, prompts = load_prompts(dataset_path)
        config = AdapterConfig(seeds=tuple(seeds))
        items, _ = run_generation(prompts, config, StubGenerator(config), tmp_path / "imgs")
        out = tmp_path / "results.json"
        n, failures = run_detection(items, config, StubDetector(), out, dataset_ref)
        return out, n, failures, items

    def test_records_match_items(self, dataset_path, tmp_path):
        out, n, failures, items = self.run_all(dataset_path, tmp_path)
        assert not failures and n == len(items)
        doc = json.loads(out.read_text())
        assert doc["schema_id"] == "tiam-results-v1"
        assert doc["model_name"] == "stub-generator"
        assert doc["detector_meta"]["confidence_threshold"] == 0.25
        assert doc["detector_meta"]["nms_iou"] == 0.8
        assert len(doc["records"]) == len(items)

    def test_no_sidecar_means_empty_detections(self, dataset_path, tmp_path):
        out, _, _, items = self.run_all(dataset_path, tmp_path)
        victim = items[0]
        sidecar_path(victim.image_path).unlink()
        dataset_ref, _ = load_prompts(dataset_path)
        n, failures = run_detection(
            items, AdapterConfig(seeds=(0, 1)), StubDetector(), out, dataset_ref
        )
        assert not failures
        doc = json.loads(out.read_text())
        by_key = {(r["prompt_id"], r["seed"]): r for r in doc["records"]}
        assert by_key[(victim.prompt_id, victim.seed)]["detections"] == []

    def test_detector_failure_keeps_file_valid(self, dataset_path, tmp_path):
        dataset_ref, prompts = load_prompts(dataset_path)
        config = AdapterConfig(seeds=(0,))
        items, _ = run_generation(prompts, config, StubGenerator(config), tmp_path / "imgs")

        class FlakyDetector(StubDetector):
            def detect(self, image, image_path):
                if image_path == items[0].image_path:
                    raise RuntimeError("detector crash")
                return super().detect(image, image_path)

        out = tmp_path / "results.json"
        n, failures = run_detection(items, config, FlakyDetector(), out, dataset_ref)
        assert n == len(items) - 1
        assert len(failures) == 1 and failures[0].stage == "detection"
        assert out.with_name("results.json.failures.json").exists()
        doc = json.loads(out.read_text())
        assert len(doc["records"]) == n

    def test_pixel_inlining_matches_source_image(self, dataset_path, tmp_path):
        out, _, _, items = self.run_all(dataset_path, tmp_path)
        doc = json.loads(out.read_text())
        record = doc["records"][0]
        image = np.asarray(Image.open(record["image_path"]).convert("RGB"))
        for det in record["detections"]:
            counts = det["mask"]["counts"]
            area = sum(counts[1::2])
            assert len(det["mask_pixels"]) == area
            # planted rectangles are flat-color: every inlined pixel equals
            # the color at the bbox corner of the source image
            x, y = int(det["bbox"][0]), int(det["bbox"][1])
            expected = image[y, x].tolist()
            assert all(px == expected for px in det["mask_pixels"])

    def test_rle_order_is_column_major(self):
        image = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
        mask = np.array([[True, False, True], [False, True, False]])
        counts = encode_mask(mask)
        assert sum(counts) == 6 and sum(counts[1::2]) == 3
        pixels = foreground_pixels(image, mask)
        # column-major order: (0,0), (1,1), (0,2)
        assert pixels.tolist() == [
            image[0, 0].tolist(),
            image[1, 1].tolist(),
            image[0, 2].tolist(),
        ]


class TestRoundTrip:
    def test_acceptance_adapter_roundtrip(self, dataset_path, tmp_path):
        """Default config (32 seeds): core validator passes, zero warnings."""
        images = tmp_path / "imgs"
        out = tmp_path / "results.json"
        code = adapter_main(
            ["run", "--dataset", str(dataset_path), "--out", str(out),
             "--images-dir", str(images)]
        )
        assert code == 0
        proc = core("validate", "--dataset", dataset_path, "--results", out)
        assert proc.returncode == 0, proc.stderr
        assert "0 warnings" in proc.stdout
        assert "warning" not in proc.stderr

        doc = json.loads(out.read_text())
        checked = 0
        for record in doc["records"]:
            for det in record["detections"]:
                assert len(det["mask_pixels"]) == sum(det["mask"]["counts"][1::2])
                checked += 1
        assert checked > 0
        print(f"[PASS] adapter round-trip (validator clean, {checked} pixel-count checks)")

    def test_scored_end_to_end(self, dataset_path, tmp_path):
        """The stub corpus scores perfectly through the core pipeline."""
        images = tmp_path / "imgs"
        out = tmp_path / "results.json"
        assert adapter_main(
            ["run", "--dataset", str(dataset_path), "--out", str(out),
             "--images-dir", str(images)]
        ) == 0
        out_dir = tmp_path / "scored"
        proc = core(
            "score", "--dataset", dataset_path, "--results", out,
            "--out-dir", out_dir,
        )
        assert proc.returncode == 0, proc.stderr
        proc = core(
            "report", "--dataset", dataset_path,
            "--outcomes", out_dir / "outcomes.jsonl", "--out-dir", out_dir,
        )
        assert proc.returncode == 0, proc.stderr
        report = json.loads((out_dir / "report.json").read_text())
        assert report["global_tiam"] == 1.0

    def test_cli_init_config_round_trip(self, tmp_path):
        cfg = tmp_path / "adapter.json"
        assert adapter_main(["init-config", "--out", str(cfg)]) == 0
        doc = json.loads(cfg.read_text())
        assert doc["generation_params"]["guidance_scale"] == 7.5
        assert doc["generation_params"]["steps"] == 50
        assert doc["detector_params"] == {"confidence_threshold": 0.25, "nms_iou": 0.8}
        assert doc["seeds"] == list(range(32))

    def test_unknown_generator_exits_1(self, dataset_path, tmp_path):
        cfg = tmp_path / "adapter.json"
        cfg.write_text(json.dumps({"generator_id": "sd-nonexistent"}), encoding="utf-8")
        code = adapter_main(
            ["run", "--dataset", str(dataset_path), "--out", str(tmp_path / "r.json"),
             "--images-dir", str(tmp_path / "imgs"), "--config", str(cfg)]
        )
        assert code == 1
