#!/usr/bin/env python3
"""Derive the shipped reference palette (src/tiam/data/palette.json).

Pipeline, run once by the maintainers and recorded here so the palette file
stays reproducible and editable:

1. Start from Berlin & Kay's most-typical ("best example") Munsell chips for
   the eight reference color terms kept by the toolkit (brown and orange are
   dropped entirely: their best examples sit too close to black and red
   respectively to act as useful classification anchors; grey is likewise
   not a reference).
2. Munsell value -> luminance Y via the ASTM D1535 quintic (normalized so
   V=10 gives Y=100); hue/chroma -> CIE 1931 (x, y) transcribed from the
   Munsell renotation chart at chart-reading precision (about +/-0.01,
   illuminant C). The per-chip figures used are embedded below and echoed
   into the palette file's provenance fields.
3. xyY (illuminant C) -> XYZ, Bradford-adapted to D65, -> CIELAB (D65, 2
   deg). Colors with several best-example chips are averaged in CIELAB.
4. For each entry, search the sRGB cube for the nearest triple (a
   convenience hint for building synthetic fixtures) and verify that every
   entry and every hint self-classifies.

Usage: python tools/derive_palette.py [output_path]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tiam.colors import (  # noqa: E402
    ATTRIBUTE_NAMES,
    PALETTE_SCHEMA_ID,
    classify_pixels,
    palette_from_dict,
    srgb_to_lab_array,
)

WHITE_C = (0.31006, 0.31616)
WHITE_D65 = (0.3127, 0.3290)

BRADFORD = np.array(
    [
        [0.8951, 0.2664, -0.1614],
        [-0.7502, 1.7135, 0.0367],
        [0.0389, -0.0685, 1.0296],
    ]
)

# (munsell chip, x, y, value); chromaticities at chart precision, illuminant C.
CHIPS: dict[str, list[tuple[str, float, float, float]]] = {
    "white": [("N 9.5/", *WHITE_C, 9.5)],
    "black": [("N 1/", *WHITE_C, 1.0)],
    "red": [("5R 4/14", 0.548, 0.320, 4.0)],
    "green": [("2.5G 5/10", 0.235, 0.440, 5.0), ("5G 5/10", 0.210, 0.405, 5.0)],
    "blue": [("2.5PB 4/10", 0.178, 0.190, 4.0), ("5PB 4/10", 0.186, 0.172, 4.0)],
    "purple": [("5P 3/10", 0.248, 0.143, 3.0)],
    "pink": [("5RP 8/6", 0.338, 0.285, 8.0), ("2.5R 8/6", 0.356, 0.302, 8.0)],
    "yellow": [("5Y 8/14", 0.465, 0.472, 8.0)],
}

ORDER = ("white", "black", "red", "green", "blue", "purple", "pink", "yellow")


def munsell_value_to_Y(v: float) -> float:
    """ASTM D1535 luminance (percent), normalized so Y(10) = 100."""
    return 1.1914 * v - 0.22533 * v**2 + 0.23352 * v**3 - 0.020484 * v**4 + 0.00081939 * v**5


def xyY_to_XYZ(x: float, y: float, Y: float) -> np.ndarray:
    return np.array([x * Y / y, Y, (1.0 - x - y) * Y / y])


def bradford_C_to_D65(xyz: np.ndarray) -> np.ndarray:
    src = BRADFORD @ xyY_to_XYZ(*WHITE_C, 1.0)
    dst = BRADFORD @ xyY_to_XYZ(*WHITE_D65, 1.0)
    return np.linalg.inv(BRADFORD) @ np.diag(dst / src) @ BRADFORD @ xyz


def xyz_to_lab_d65(xyz: np.ndarray) -> np.ndarray:
    wp = xyY_to_XYZ(*WHITE_D65, 1.0)
    eps, kappa = 216.0 / 24389.0, 24389.0 / 27.0
    t = xyz / wp
    f = np.where(t > eps, np.cbrt(t), (kappa * t + 16.0) / 116.0)
    return np.array([116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])])


def chip_to_lab(x: float, y: float, v: float) -> np.ndarray:
    xyz = xyY_to_XYZ(x, y, munsell_value_to_Y(v) / 100.0)
    return xyz_to_lab_d65(bradford_C_to_D65(xyz))


def nearest_srgb(target_lab: np.ndarray) -> tuple[int, int, int]:
    """Nearest sRGB triple to a Lab target: coarse grid then local refine."""
    grid = np.arange(0, 256, 5)
    cube = np.stack(np.meshgrid(grid, grid, grid, indexing="ij"), axis=-1).reshape(-1, 3)
    labs = srgb_to_lab_array(cube)
    best = cube[np.argmin(((labs - target_lab) ** 2).sum(axis=1))]
    lo = np.maximum(best - 5, 0)
    hi = np.minimum(best + 5, 255)
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(3)]
    fine = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    labs = srgb_to_lab_array(fine)
    best = fine[np.argmin(((labs - target_lab) ** 2).sum(axis=1))]
    return int(best[0]), int(best[1]), int(best[2])


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src" / "tiam" / "data" / "palette.json"
    )
    entries = []
    for name in ORDER:
        chips = CHIPS[name]
        lab = np.mean([chip_to_lab(x, y, v) for _, x, y, v in chips], axis=0)
        hint = nearest_srgb(lab)
        chip_note = "; ".join(
            f"{chip} at xyY(C)=({x}, {y}, Y(V)={munsell_value_to_Y(v):.2f}%)"
            for chip, x, y, v in chips
        )
        entries.append(
            {
                "name": name,
                "L": round(float(lab[0]), 4),
                "a": round(float(lab[1]), 4),
                "b": round(float(lab[2]), 4),
                "srgb_hint": list(hint),
                "provenance": (
                    f"Berlin-Kay best example(s): {chip_note}; averaged in CIELAB"
                    f" after Bradford C->D65 adaptation."
                ),
            }
        )
    doc = {
        "schema_id": PALETTE_SCHEMA_ID,
        "provenance": (
            "Derived by tools/derive_palette.py: Berlin-Kay best-example Munsell"
            " chips -> Y via ASTM D1535 quintic, (x, y) transcribed from the"
            " Munsell renotation chart at chart-reading precision (illuminant C),"
            " Bradford-adapted to D65, averaged per color in CIELAB. brown and"
            " orange omitted (best examples nearly coincide with black and red);"
            " grey omitted (not a reference color here). Edit freely: every"
            " consumer reads this file rather than hardcoded constants."
        ),
        "binding_attributes": list(ATTRIBUTE_NAMES),
        "entries": entries,
    }

    palette = palette_from_dict(doc)
    refs = palette.lab_matrix
    self_idx = classify_pixels(refs, palette)
    assert list(self_idx) == list(range(len(refs))), "palette entries must self-classify"
    for i, entry in enumerate(entries):
        hint_lab = srgb_to_lab_array(np.array(entry["srgb_hint"], dtype=float))
        got = int(classify_pixels(hint_lab, palette))
        assert got == i, f"srgb_hint for {entry['name']} classifies as {palette.names[got]}"

    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    dmat = np.sqrt(((refs[:, None, :] - refs[None, :, :]) ** 2).sum(-1))
    print(f"wrote {out}")
    print(f"min inter-reference distance: {dmat[dmat > 0].min():.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
