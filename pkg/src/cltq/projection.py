"""The |V| x L projection matrix shared by SCL and DCI, and its TSV dump."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .vectorizer import SparseVector


@dataclass(frozen=True)
class ProjectionMatrix:
    matrix: np.ndarray
    language: str
    method: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise ValueError("projection matrix must be 2-d")
        if not np.all(np.isfinite(m)):
            raise ValueError("projection matrix has non-finite entries")
        if self.method not in ("scl", "dci"):
            raise ValueError(f"unknown projection method {self.method!r}")
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def project(x: SparseVector, theta: ProjectionMatrix) -> np.ndarray:
    """x^T theta for a single sparse vector."""
    if x.dim > theta.rows or (len(x.indices) and x.indices[-1] >= theta.rows):
        raise IndexError(f"vector index out of range for a {theta.rows}-row projection")
    return x.weights @ theta.matrix[x.indices] if len(x.indices) else np.zeros(theta.dim)


def project_rows(X: sp.spmatrix, theta: ProjectionMatrix) -> np.ndarray:
    """Project every row of a sparse document-term matrix."""
    if X.shape[1] != theta.rows:
        raise IndexError(f"{X.shape[1]} columns vs a {theta.rows}-row projection")
    return np.asarray(X @ theta.matrix)


def save_projection(theta: ProjectionMatrix, path) -> None:
    rows, cols = theta.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{rows} {cols} {theta.method} {theta.language}\n")
        np.savetxt(fh, theta.matrix, delimiter="\t", fmt="%.17g")


def load_projection(path) -> ProjectionMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise ValueError(f"{path}: bad header {header!r}")
        rows, cols = int(header[0]), int(header[1])
        data = np.loadtxt(fh, delimiter="\t", ndmin=2) if rows and cols else np.zeros((rows, cols))
    if data.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, found {data.shape}")
    return ProjectionMatrix(data, header[3], header[2])
