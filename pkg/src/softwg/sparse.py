"""Symmetric sparse matrices in CSR layout."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels


@dataclass(frozen=True)
class SparseSymMatrix:
    """Symmetric matrix stored as full CSR (both triangles).

    Rows keep their column indices sorted, so the lower and upper halves can
    be split off with :meth:`triangle`.
    """

    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    data: np.ndarray = field(repr=False)
    dim: int

    @property
    def nnz(self) -> int:
        return int(self.data.size)

    def matvec(self, x) -> np.ndarray:
        return _kernels.csr_matvec(self.indptr, self.indices, self.data, x)

    def __matmul__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return self.matvec(x)
        return np.column_stack([self.matvec(c) for c in x.T])

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.dim, self.dim))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def triangle(self, lower: bool = False) -> sp.csr_matrix:
        m = self.to_scipy()
        return sp.tril(m, format="csr") if lower else sp.triu(m, format="csr")

    def gershgorin_bounds(self):
        m = self.to_scipy()
        diag = m.diagonal()
        radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
        return float(np.min(diag - radius)), float(np.max(diag + radius))

    def symmetry_defect(self) -> float:
        m = self.to_scipy()
        diff = m - m.T
        return float(abs(diff).max()) if diff.nnz else 0.0

    @classmethod
    def from_scipy(cls, m) -> "SparseSymMatrix":
        m = sp.csr_matrix(m, dtype=np.float64)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.indptr.astype(np.int64), m.indices.astype(np.int64), m.data.copy(), m.shape[0])

    @classmethod
    def from_dense(cls, a) -> "SparseSymMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, dtype=np.float64)))

    def dump(self, path) -> None:
        """Write ``dim nnz`` then ``row col value`` lines (0-based, 17 digits)."""
        coo = self.to_scipy().tocoo()
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(f"{self.dim} {coo.nnz}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v:.17g}\n")

    @classmethod
    def load(cls, path) -> "SparseSymMatrix":
        with open(path, encoding="ascii") as fh:
            dim, nnz = (int(x) for x in fh.readline().split())
            body = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 3))
        if body.shape[0] != nnz:
            raise ValueError(f"header announces {nnz} entries, found {body.shape[0]}")
        m = sp.coo_matrix((body[:, 2], (body[:, 0].astype(np.int64), body[:, 1].astype(np.int64))),
                          shape=(dim, dim))
        return cls.from_scipy(m)
