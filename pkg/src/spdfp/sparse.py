"""Row-compressed sparse matrices and spectral estimation.

The solvers only ever need y = Mx, y = M^T x (optionally restricted to a row
range) and the extreme eigenvalues of M M^T, so that is the whole surface of
this module. Storage is canonical CSR: sorted column indices within each row,
duplicates summed and exact zeros dropped at construction, which fixes the
reduction order and keeps runs bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np

from spdfp import _kernels


class SparseMatrix:
    """Immutable CSR matrix.

    Parameters
    ----------
    n_rows, n_cols : int
        Matrix shape.
    indptr, indices, data : ndarray
        Standard CSR arrays (int64, int64, float64). Assumed canonical;
        use :meth:`from_coo` / :meth:`from_dense` to canonicalize arbitrary
        input.
    """

    __slots__ = ("n_rows", "n_cols", "indptr", "indices", "data")

    def __init__(self, n_rows, n_cols, indptr, indices, data):
        if n_rows < 0 or n_cols < 0:
            raise ValueError("negative matrix dimension")
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        data = np.ascontiguousarray(data, dtype=np.float64)
        if indptr.shape != (n_rows + 1,) or indptr[0] != 0 or indptr[-1] != len(data):
            raise ValueError("malformed indptr")
        if len(indices) != len(data):
            raise ValueError("indices/data length mismatch")
        if len(indices) and (indices.min() < 0 or indices.max() >= n_cols):
            raise ValueError("column index out of range")
        for arr in (indptr, indices, data):
            arr.setflags(write=False)
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.indptr = indptr
        self.indices = indices
        self.data = data

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals):
        """Build from coordinate triples: duplicates summed, zeros dropped."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows/cols/vals must have equal length")
        if len(rows) and (rows.min() < 0 or rows.max() >= n_rows
                          or cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("entry index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            first = np.ones(len(rows), dtype=bool)
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group = np.cumsum(first) - 1
            summed = np.bincount(group, weights=vals)
            rows, cols = rows[first], cols[first]
            keep = summed != 0.0
            rows, cols, summed = rows[keep], cols[keep], summed[keep]
        else:
            summed = vals
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(n_rows, n_cols, indptr, cols, summed)

    @classmethod
    def from_dense(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected a 2-d array")
        rows, cols = np.nonzero(arr)
        return cls.from_coo(arr.shape[0], arr.shape[1], rows, cols, arr[rows, cols])

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return len(self.data)

    def matvec(self, x):
        """Return M x."""
        return self.matvec_range(x, 0, self.n_rows)

    def matvec_range(self, x, row_start, row_stop):
        """Return rows [row_start, row_stop) of M applied to x."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.n_cols,):
            raise ValueError(f"matvec expects a vector of length {self.n_cols}")
        if not 0 <= row_start <= row_stop <= self.n_rows:
            raise ValueError("row range out of bounds")
        out = np.empty(row_stop - row_start)
        _kernels.csr_matvec_range(self.indptr, self.indices, self.data,
                                  x, out, row_start, row_stop)
        return out

    def rmatvec(self, y):
        """Return M^T y."""
        return self.rmatvec_range(y, 0, self.n_rows)

    def rmatvec_range(self, y, row_start, row_stop):
        """Return (rows [row_start, row_stop) of M)^T applied to y."""
        y = np.ascontiguousarray(y, dtype=np.float64)
        if y.shape != (row_stop - row_start,):
            raise ValueError("rmatvec length mismatch with row range")
        if not 0 <= row_start <= row_stop <= self.n_rows:
            raise ValueError("row range out of bounds")
        out = np.empty(self.n_cols)
        _kernels.csr_rmatvec_range(self.indptr, self.indices, self.data,
                                   y, out, row_start, row_stop)
        return out

    def transpose(self):
        rows, cols, vals = self.entries()
        return SparseMatrix.from_coo(self.n_cols, self.n_rows, cols, rows, vals)

    def to_dense(self):
        out = np.zeros((self.n_rows, self.n_cols))
        rows, cols, vals = self.entries()
        out[rows, cols] = vals
        return out

    def entries(self):
        """Coordinate view (rows, cols, vals) in row-major order."""
        counts = np.diff(self.indptr)
        rows = np.repeat(np.arange(self.n_rows, dtype=np.int64), counts)
        return rows, self.indices.copy(), self.data.copy()

    def row_block(self, row_start, row_stop):
        """The submatrix of rows [row_start, row_stop) as a SparseMatrix."""
        lo, hi = self.indptr[row_start], self.indptr[row_stop]
        indptr = (self.indptr[row_start:row_stop + 1] - lo).copy()
        return SparseMatrix(row_stop - row_start, self.n_cols, indptr,
                            self.indices[lo:hi].copy(), self.data[lo:hi].copy())

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def identity(d):
    """The d x d identity as a SparseMatrix."""
    r = np.arange(d)
    return SparseMatrix.from_coo(d, d, r, r, np.ones(d))


def build_difference_matrix(d):
    """First-order difference operator: (d-1) x d, -1 on the diagonal and +1
    on the superdiagonal, so (Mx)_i = x_{i+1} - x_i."""
    if d < 2:
        raise ValueError("difference matrix needs dimension >= 2")
    rows = np.repeat(np.arange(d - 1), 2)
    cols = np.empty(2 * (d - 1), dtype=np.int64)
    cols[0::2] = np.arange(d - 1)
    cols[1::2] = np.arange(1, d)
    vals = np.tile([-1.0, 1.0], d - 1)
    return SparseMatrix.from_coo(d - 1, d, rows, cols, vals)


def stack_identity(G):
    """Vertical stack [G; I] with I the identity on G's column space."""
    d = G.n_cols
    g_rows, g_cols, g_vals = G.entries()
    rows = np.concatenate([g_rows, G.n_rows + np.arange(d)])
    cols = np.concatenate([g_cols, np.arange(d)])
    vals = np.concatenate([g_vals, np.ones(d)])
    return SparseMatrix.from_coo(G.n_rows + d, d, rows, cols, vals)


@dataclass(frozen=True)
class SpectralEstimate:
    """Extreme eigenvalues of B B^T from power iteration.

    rho_min is a best-effort diagnostic (0 for rank-deficient B); solvers
    only consume rho_max.
    """

    rho_max: float
    rho_min: float
    iterations_used: int
    tolerance: float
    converged: bool


def _power_top(apply_op, dim, tol, max_iter, rng):
    """Largest eigenvalue of a symmetric PSD operator by power iteration."""
    u = rng.standard_normal(dim)
    u /= np.linalg.norm(u)
    rho = 0.0
    for it in range(1, max_iter + 1):
        s = apply_op(u)
        ns = np.linalg.norm(s)
        if ns <= 1e-300:
            return 0.0, it, True
        rho_new = float(u @ s)
        u = s / ns
        if abs(rho_new - rho) <= tol * max(abs(rho_new), 1e-300):
            return rho_new, it, True
        rho = rho_new
    return rho, max_iter, False


def estimate_spectrum(B, tol=1e-10, max_iter=10000):
    """Estimate rho_max(B B^T) and, as a diagnostic, rho_min(B B^T).

    rho_max comes from power iteration on u -> B(B^T u); rho_min from a
    second power iteration on the shifted operator rho_max*I - B B^T.
    A failure to converge within max_iter is reported through the
    ``converged`` flag, not an exception.
    """
    if B.n_rows == 0 or B.n_cols == 0:
        raise ValueError("cannot estimate spectrum of an empty matrix")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    rng = np.random.default_rng(0)

    def bbt(u):
        return B.matvec(B.rmatvec(u))

    rho_max, it1, ok1 = _power_top(bbt, B.n_rows, tol, max_iter, rng)
    rho_max = max(rho_max, 0.0)

    def shifted(u):
        return rho_max * u - bbt(u)

    top_shift, it2, ok2 = _power_top(shifted, B.n_rows, tol, max_iter, rng)
    rho_min = min(max(rho_max - max(top_shift, 0.0), 0.0), rho_max)
    return SpectralEstimate(rho_max=rho_max, rho_min=rho_min,
                            iterations_used=it1 + it2, tolerance=tol,
                            converged=ok1 and ok2)
