"""Column-major uncompressed RLE, coded to the results-file schema.

Runs alternate background/foreground starting with background; pixel order
is column-major (flat index = x * height + y). Foreground pixel colors are
extracted in the same order so they line up with the mask runs.
"""

from __future__ import annotations

import numpy as np


def encode_mask(bitmap: np.ndarray) -> list[int]:
    bitmap = np.asarray(bitmap, dtype=bool)
    flat = bitmap.flatten(order="F")
    changes = np.flatnonzero(np.diff(flat)) + 1
    edges = np.concatenate([[0], changes, [flat.size]])
    counts = np.diff(edges).tolist()
    if flat[0]:
        counts = [0] + counts
    return [int(c) for c in counts]


def foreground_pixels(image: np.ndarray, bitmap: np.ndarray) -> np.ndarray:
    """(n, 3) sRGB rows for the mask's foreground, in RLE order."""
    h, w = bitmap.shape
    flat_mask = np.asarray(bitmap, dtype=bool).flatten(order="F")
    flat_image = np.asarray(image).transpose(1, 0, 2).reshape(w * h, 3)
    return flat_image[flat_mask]
