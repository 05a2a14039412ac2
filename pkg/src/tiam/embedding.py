"""Object-pair dissimilarity, classical MDS projection, and correlation.

The dissimilarity between two object labels is the mean per-prompt
alignment rate of the two prompts pairing them in either order (diagonal
zero): labels that embed close together are pairs the generator struggles
to render jointly. The projection is classical (double-centering) MDS with
a fixed sign convention so outputs are reproducible byte for byte.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, SchemaError
from .fileio import atomic_write_text

__all__ = [
    "DissimilarityMatrix",
    "Embedding2D",
    "build_dissimilarity",
    "classical_mds",
    "correlate",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_embedding_csv",
]

_SIGN_TOL = 1e-12


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Symmetric, zero-diagonal dissimilarities over ordered labels."""

    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        n = len(self.labels)
        if v.shape != (n, n):
            raise DataError(f"expected a {n}x{n} matrix, got {v.shape}")
        if not np.allclose(v, v.T, atol=1e-12):
            raise DataError("dissimilarity matrix must be symmetric")
        if not np.allclose(np.diag(v), 0.0, atol=1e-12):
            raise DataError("dissimilarity matrix must have a zero diagonal")
        object.__setattr__(self, "values", v)

    def pair_vector(self) -> np.ndarray:
        """Upper-triangle values in (i < j) row-major order."""
        iu = np.triu_indices(len(self.labels), k=1)
        return self.values[iu]


@dataclass(frozen=True)
class Embedding2D:
    """Low-dimensional coordinates per label plus a goodness-of-fit stress.

    ``n_axes`` counts the strictly positive eigenvalue axes actually used;
    when fewer than the requested dimension exist, the remaining columns
    are zero and ``deficient`` flags it.
    """

    labels: tuple[str, ...]
    coordinates: np.ndarray
    stress: float
    n_axes: int
    deficient: bool


def build_dissimilarity(
    per_pair_tiam: Mapping[tuple[str, str], float],
    labels: Sequence[str],
) -> DissimilarityMatrix:
    """d(x, y) = mean of the (x, y) and (y, x) per-prompt alignment rates."""
    labels = tuple(labels)
    if len(set(labels)) != len(labels):
        raise DataError("labels must be unique")
    n = len(labels)
    values = np.zeros((n, n))
    for i, x in enumerate(labels):
        for j, y in enumerate(labels):
            if i >= j:
                continue
            try:
                forward = per_pair_tiam[(x, y)]
                backward = per_pair_tiam[(y, x)]
            except KeyError as exc:
                raise DataError(f"missing per-prompt rate for pair {exc.args[0]}") from None
            values[i, j] = values[j, i] = (forward + backward) / 2.0
    return DissimilarityMatrix(labels=labels, values=values)


def classical_mds(matrix: DissimilarityMatrix, dim: int = 2) -> Embedding2D:
    """Double-centering MDS: B = -1/2 J D^2 J, top eigenpairs as axes.

    Axis k is the k-th largest strictly positive eigenvalue's eigenvector
    scaled by the eigenvalue's square root. Each axis is reflected so its
    first nonzero coordinate is positive. Stress is the normalized residual
    sqrt(sum (d - d_hat)^2 / sum d^2) over distinct pairs.
    """
    if dim < 1:
        raise DataError(f"dim must be >= 1, got {dim}")
    d = matrix.values
    n = d.shape[0]
    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * j @ (d**2) @ j
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]

    scale = max(float(evals[0]), 1.0) if n else 1.0
    positive = evals > 1e-12 * scale
    n_axes = min(dim, int(positive.sum()))

    coords = np.zeros((n, dim))
    if n_axes:
        coords[:, :n_axes] = evecs[:, :n_axes] * np.sqrt(evals[:n_axes])
    for k in range(n_axes):
        column = coords[:, k]
        nonzero = np.flatnonzero(np.abs(column) > _SIGN_TOL)
        if nonzero.size and column[nonzero[0]] < 0:
            coords[:, k] = -column

    diff = coords[:, None, :] - coords[None, :, :]
    embedded = np.sqrt((diff**2).sum(axis=-1))
    iu = np.triu_indices(n, k=1)
    denom = float((d[iu] ** 2).sum())
    if denom > 0:
        stress = float(np.sqrt(((d[iu] - embedded[iu]) ** 2).sum() / denom))
    else:
        stress = 0.0
    return Embedding2D(
        labels=matrix.labels,
        coordinates=coords,
        stress=stress,
        n_axes=n_axes,
        deficient=n_axes < dim,
    )


def correlate(matrix_a: DissimilarityMatrix, matrix_b: DissimilarityMatrix) -> float:
    """Pearson correlation over unordered label pairs of two matrices."""
    if set(matrix_a.labels) != set(matrix_b.labels):
        raise DataError("matrices must cover the same label set")
    order = [matrix_b.labels.index(label) for label in matrix_a.labels]
    aligned = matrix_b.values[np.ix_(order, order)]
    x = matrix_a.pair_vector()
    y = DissimilarityMatrix(matrix_a.labels, aligned).pair_vector()
    if x.std() == 0 or y.std() == 0:
        raise DataError("correlation undefined: zero variance in pair values")
    return float(np.corrcoef(x, y)[0, 1])


# --- CSV interchange ----------------------------------------------------------


def write_matrix_csv(matrix: DissimilarityMatrix, path: str | Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", *matrix.labels])
    for label, row in zip(matrix.labels, matrix.values):
        writer.writerow([label, *[repr(float(v)) for v in row]])
    atomic_write_text(path, buf.getvalue())


def read_matrix_csv(path: str | Path) -> DissimilarityMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows or len(rows[0]) < 2:
        raise SchemaError(f"{path}: expected a label header row")
    labels = tuple(rows[0][1:])
    if len(rows) != len(labels) + 1:
        raise SchemaError(f"{path}: expected {len(labels)} data rows, got {len(rows) - 1}")
    values = np.zeros((len(labels), len(labels)))
    for i, row in enumerate(rows[1:]):
        if row[0] != labels[i]:
            raise SchemaError(f"{path}: row {i + 1} label {row[0]!r} != column {labels[i]!r}")
        if len(row) != len(labels) + 1:
            raise SchemaError(f"{path}: row {i + 1} has {len(row) - 1} values")
        values[i] = [float(v) for v in row[1:]]
    try:
        return DissimilarityMatrix(labels=labels, values=values)
    except DataError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def write_embedding_csv(embedding: Embedding2D, path: str | Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    axes = [f"axis_{k + 1}" for k in range(embedding.coordinates.shape[1])]
    writer.writerow(["label", *axes])
    for label, row in zip(embedding.labels, embedding.coordinates):
        writer.writerow([label, *[repr(float(v)) for v in row]])
    atomic_write_text(path, buf.getvalue())
