"""Run-length encoded binary segmentation masks and exact IoU.

Masks use uncompressed COCO-style RLE: column-major pixel order (index =
x * height + y), alternating background/foreground run lengths starting
with background. IoU is computed directly on the foreground run intervals,
without decoding to a bitmap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DataError

__all__ = ["SegmentationMask", "mask_iou"]


@dataclass(frozen=True)
class SegmentationMask:
    width: int
    height: int
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise DataError(f"mask dimensions must be positive, got {self.width}x{self.height}")
        if any(c < 0 for c in self.counts):
            raise DataError("RLE run lengths must be non-negative")
        total = sum(self.counts)
        if total != self.width * self.height:
            raise DataError(
                f"RLE runs sum to {total}, expected width*height = {self.width * self.height}"
            )
        if self.area == 0:
            raise DataError("mask has no foreground pixels")

    @property
    def area(self) -> int:
        """Foreground pixel count (sum of the odd-indexed runs)."""
        return sum(self.counts[1::2])

    @cached_property
    def _intervals(self) -> tuple[tuple[int, int], ...]:
        """Foreground [start, end) intervals in flat column-major order."""
        edges = np.concatenate([[0], np.cumsum(self.counts)])
        return tuple(
            (int(edges[i]), int(edges[i + 1]))
            for i in range(1, len(self.counts), 2)
            if edges[i] < edges[i + 1]
        )

    def decode(self) -> np.ndarray:
        """Boolean bitmap of shape (height, width)."""
        flags = np.arange(len(self.counts)) % 2 == 1
        flat = np.repeat(flags, self.counts)
        return flat.reshape((self.height, self.width), order="F")

    @classmethod
    def from_array(cls, bitmap: np.ndarray) -> "SegmentationMask":
        """Encode a 2-D boolean array (rows y, columns x)."""
        bitmap = np.asarray(bitmap, dtype=bool)
        if bitmap.ndim != 2:
            raise DataError(f"expected a 2-D bitmap, got shape {bitmap.shape}")
        h, w = bitmap.shape
        flat = bitmap.flatten(order="F")
        changes = np.flatnonzero(np.diff(flat)) + 1
        edges = np.concatenate([[0], changes, [flat.size]])
        counts = np.diff(edges).tolist()
        if flat[0]:
            counts = [0] + counts
        return cls(width=w, height=h, counts=tuple(int(c) for c in counts))


def mask_iou(m1: SegmentationMask, m2: SegmentationMask) -> float:
    """Intersection-over-union of foreground pixels, via run intervals."""
    if (m1.width, m1.height) != (m2.width, m2.height):
        raise DataError(
            f"mask dimension mismatch: {m1.width}x{m1.height} vs {m2.width}x{m2.height}"
        )
    a, b = m1._intervals, m2._intervals
    i = j = 0
    inter = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            inter += hi - lo
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    union = m1.area + m2.area - inter
    return inter / union
