"""CIELAB conversion, reference-palette classification, attribute binding.

Pixels are classified by nearest Euclidean distance in CIELAB against eight
reference colors (white, black, red, green, blue, purple, pink, yellow);
only the six non-achromatic ones are usable as prompt attributes. An
attribute binds to a mask when at least ``binding_threshold`` (default 40%)
of the mask's pixels classify as that attribute's color.

The shipped reference palette is a data file (``data/palette.json``) derived
from Munsell best-example chips; see its provenance fields and
``tools/derive_palette.py``. Classification always targets all eight entries,
binding only the six attribute colors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, EmptyMaskError, SchemaError

PALETTE_SCHEMA_ID = "tiam-palette-v1"
BINDING_THRESHOLD_DEFAULT = 0.40

PALETTE_NAMES = ("white", "black", "red", "green", "blue", "purple", "pink", "yellow")
ATTRIBUTE_NAMES = ("red", "green", "blue", "purple", "pink", "yellow")

# sRGB -> XYZ (D65, 2 deg) derived from the IEC 61966-2-1 primary and white
# chromaticities; the reference white is the matrix row sums, so (255,255,255)
# maps to exactly L*=100, a*=b*=0.
_XYZ_FROM_RGB = np.array(
    [
        [0.412390799266, 0.357584339384, 0.180480788402],
        [0.212639005872, 0.715168678768, 0.072192315361],
        [0.019330818716, 0.119194779795, 0.950532152250],
    ]
)
_WHITE = _XYZ_FROM_RGB.sum(axis=1)
_EPS = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


@dataclass(frozen=True)
class LabColor:
    """A CIELAB color; L in [0, 100], a and b unbounded but finite."""

    L: float
    a: float
    b: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.L <= 100.0):
            raise DataError(f"L must be in [0, 100], got {self.L}")
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise DataError("a and b must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.L, self.a, self.b])


@dataclass(frozen=True)
class BindingVerdict:
    """Outcome of the proportion test for one attribute over one mask."""

    target_attribute: str
    proportion: float
    success: bool


@dataclass(frozen=True)
class ReferencePalette:
    """Ordered reference colors plus the subset usable as attributes."""

    entries: tuple[tuple[str, LabColor], ...]
    attribute_names: tuple[str, ...] = ATTRIBUTE_NAMES
    srgb_hints: tuple[tuple[int, int, int], ...] | None = None

    def __post_init__(self) -> None:
        names = [name for name, _ in self.entries]
        if sorted(names) != sorted(PALETTE_NAMES):
            raise SchemaError(f"palette must contain exactly {PALETTE_NAMES}, got {tuple(names)}")
        if sorted(self.attribute_names) != sorted(ATTRIBUTE_NAMES):
            raise SchemaError(f"palette attributes must be exactly {ATTRIBUTE_NAMES}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    @property
    def lab_matrix(self) -> np.ndarray:
        return np.array([[c.L, c.a, c.b] for _, c in self.entries])

    def srgb_hint(self, name: str) -> tuple[int, int, int]:
        """A convenient sRGB triple that classifies as ``name``."""
        if self.srgb_hints is None:
            raise DataError("palette file carries no srgb hints")
        return self.srgb_hints[self.names.index(name)]


def srgb_to_lab_array(rgb: np.ndarray) -> np.ndarray:
    """Vectorized sRGB (0-255, shape (..., 3)) to CIELAB (D65, 2 deg)."""
    rgb = np.asarray(rgb, dtype=float)
    if rgb.shape[-1] != 3:
        raise DataError(f"expected trailing dimension 3, got shape {rgb.shape}")
    if rgb.min(initial=0.0) < 0.0 or rgb.max(initial=0.0) > 255.0:
        raise DataError("sRGB channel values must lie in [0, 255]")
    c = rgb / 255.0
    linear = np.where(c > 0.04045, ((c + 0.055) / 1.055) ** 2.4, c / 12.92)
    xyz = linear @ _XYZ_FROM_RGB.T
    t = xyz / _WHITE
    fxyz = np.where(t > _EPS, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)
    lab = np.empty_like(fxyz)
    lab[..., 0] = 116.0 * fxyz[..., 1] - 16.0
    lab[..., 1] = 500.0 * (fxyz[..., 0] - fxyz[..., 1])
    lab[..., 2] = 200.0 * (fxyz[..., 1] - fxyz[..., 2])
    return lab


def srgb_to_lab(r: int, g: int, b: int) -> LabColor:
    """Convert one sRGB triple (0-255 per channel) to CIELAB."""
    lab = srgb_to_lab_array(np.array([r, g, b], dtype=float))
    # Clamp the roundoff at the extremes so L stays inside [0, 100].
    return LabColor(float(np.clip(lab[0], 0.0, 100.0)), float(lab[1]), float(lab[2]))


def classify_pixels(lab_pixels: np.ndarray, palette: ReferencePalette) -> np.ndarray:
    """Palette-entry index of the nearest reference color per pixel.

    Ties resolve to the earliest palette entry (argmin keeps the first).
    """
    lab_pixels = np.asarray(lab_pixels, dtype=float)
    refs = palette.lab_matrix
    d2 = ((lab_pixels[..., None, :] - refs) ** 2).sum(axis=-1)
    return np.argmin(d2, axis=-1)


def classify_pixel(pixel: LabColor, palette: ReferencePalette) -> str:
    """Name of the reference color nearest to one pixel."""
    idx = int(classify_pixels(pixel.as_array(), palette))
    return palette.names[idx]


def _as_lab_array(mask_pixels: np.ndarray | Sequence[LabColor]) -> np.ndarray:
    if isinstance(mask_pixels, np.ndarray):
        arr = np.asarray(mask_pixels, dtype=float)
    else:
        arr = np.array([[p.L, p.a, p.b] for p in mask_pixels], dtype=float)
    if arr.ndim != 2 or (arr.size and arr.shape[1] != 3):
        raise DataError(f"expected (n, 3) Lab pixels, got shape {arr.shape}")
    return arr


def check_binding(
    mask_pixels: np.ndarray | Sequence[LabColor],
    target: str,
    palette: ReferencePalette,
    binding_threshold: float = BINDING_THRESHOLD_DEFAULT,
) -> BindingVerdict:
    """Proportion test: does the mask bind to the target attribute color?

    ``mask_pixels`` are the CIELAB colors of the mask's foreground pixels.
    Success means proportion >= binding_threshold. An empty mask is an
    error, not a failed binding.
    """
    if target not in palette.attribute_names:
        raise DataError(f"target {target!r} is not an attribute color")
    arr = _as_lab_array(mask_pixels)
    if arr.shape[0] == 0:
        raise EmptyMaskError("binding check on an empty mask")
    target_idx = palette.names.index(target)
    hits = int((classify_pixels(arr, palette) == target_idx).sum())
    proportion = hits / arr.shape[0]
    return BindingVerdict(target, proportion, proportion >= binding_threshold)


def palette_from_dict(doc: dict) -> ReferencePalette:
    try:
        if doc["schema_id"] != PALETTE_SCHEMA_ID:
            raise SchemaError(f"unexpected palette schema_id {doc['schema_id']!r}")
        entries = []
        hints = []
        for entry in doc["entries"]:
            entries.append((entry["name"], LabColor(entry["L"], entry["a"], entry["b"])))
            hint = entry.get("srgb_hint")
            hints.append(tuple(int(v) for v in hint) if hint else None)
        srgb_hints = tuple(hints) if all(h is not None for h in hints) else None
        return ReferencePalette(
            entries=tuple(entries),
            attribute_names=tuple(doc.get("binding_attributes", ATTRIBUTE_NAMES)),
            srgb_hints=srgb_hints,
        )
    except KeyError as exc:
        raise SchemaError(f"palette document missing field {exc.args[0]!r}") from None


def load_palette(path: str | Path) -> ReferencePalette:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return palette_from_dict(doc)


@lru_cache(maxsize=1)
def default_palette() -> ReferencePalette:
    """The palette shipped with the package (data/palette.json)."""
    text = resources.files("tiam.data").joinpath("palette.json").read_text("utf-8")
    return palette_from_dict(json.loads(text))
