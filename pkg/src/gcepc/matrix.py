"""Real dense/sparse matrices, block grids, products and Matrix Market I/O.

A :class:`BlockMatrix` wraps either a read-only ``numpy`` array or a
canonical ``scipy.sparse`` CSR array (sorted indices, duplicates summed,
explicit zeros dropped).  Everything downstream (encoders, workers,
decoder) manipulates matrices only through the functions in this module,
so the dense and sparse code paths stay interchangeable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import MatrixMarketError, ParameterError, PartitionError, ShapeError

# A sparse accumulation is converted to dense storage once its fill exceeds
# this fraction of the matrix capacity.
SPARSE_FILL_LIMIT = 0.5


def _canonical_csr(data):
    csr = sp.csr_array(data, dtype=np.float64, copy=True)
    csr.sum_duplicates()
    csr.eliminate_zeros()
    csr.sort_indices()
    return csr


class BlockMatrix:
    """Immutable real matrix with dense or sparse storage."""

    __slots__ = ("_dense", "_sparse")

    def __init__(self, data):
        if isinstance(data, BlockMatrix):
            self._dense, self._sparse = data._dense, data._sparse
            return
        if sp.issparse(data):
            if data.ndim != 2:
                raise ShapeError("sparse input must be 2-D")
            self._dense = None
            self._sparse = _canonical_csr(data)
        else:
            arr = np.array(data, dtype=np.float64, copy=True)
            if arr.ndim != 2:
                raise ShapeError(f"expected a 2-D array, got ndim={arr.ndim}")
            arr.setflags(write=False)
            self._dense = arr
            self._sparse = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_triples(cls, rows, cols, triples):
        """Build a sparse matrix from ``(row, col, value)`` triples (0-based).

        Duplicate positions are summed.
        """
        triples = list(triples)
        if triples:
            r, c, v = (np.asarray(t) for t in zip(*triples))
        else:
            r = c = np.zeros(0, dtype=np.int64)
            v = np.zeros(0)
        r = r.astype(np.int64)
        c = c.astype(np.int64)
        if r.size and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
            raise ShapeError(f"triple index out of range for a {rows}x{cols} matrix")
        coo = sp.coo_array((v.astype(np.float64), (r, c)), shape=(rows, cols))
        return cls(coo)

    @classmethod
    def identity(cls, n, sparse=False):
        if sparse:
            return cls(sp.eye_array(n, format="csr"))
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, rows, cols, sparse=True):
        if sparse:
            return cls(sp.csr_array((rows, cols), dtype=np.float64))
        return cls(np.zeros((rows, cols)))

    # -- views ----------------------------------------------------------
    @property
    def shape(self):
        return (self._sparse if self._dense is None else self._dense).shape

    @property
    def rows(self):
        return self.shape[0]

    @property
    def cols(self):
        return self.shape[1]

    @property
    def is_sparse(self):
        return self._sparse is not None

    @property
    def nnz(self):
        if self._sparse is not None:
            return int(self._sparse.nnz)
        return int(np.count_nonzero(self._dense))

    @property
    def capacity(self):
        return self.rows * self.cols

    @property
    def raw(self):
        """The underlying ndarray (read-only) or CSR array. Do not mutate."""
        return self._dense if self._sparse is None else self._sparse

    def to_dense(self):
        if self._sparse is not None:
            return self._sparse.toarray()
        return self._dense.copy()

    def to_sparse(self):
        if self._sparse is not None:
            return self
        return BlockMatrix(sp.csr_array(self._dense))

    def triples(self):
        """Sorted nonzero ``(row, col, value)`` triples."""
        csr = self._sparse if self._sparse is not None else _canonical_csr(self._dense)
        coo = csr.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order]

    @property
    def T(self):
        if self._sparse is not None:
            return BlockMatrix(self._sparse.T)
        return BlockMatrix(self._dense.T)

    def __eq__(self, other):
        if not isinstance(other, BlockMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.to_dense(), other.to_dense())

    __hash__ = None

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"BlockMatrix({self.rows}x{self.cols}, {kind}, nnz={self.nnz})"


def _settle(raw):
    """Wrap a raw product/sum, densifying sparse results past the fill limit."""
    if sp.issparse(raw):
        m = BlockMatrix(raw)
        if m.capacity and m.nnz > SPARSE_FILL_LIMIT * m.capacity:
            return BlockMatrix(m.to_dense())
        return m
    return BlockMatrix(np.asarray(raw))


def random_sparse(rows, cols, density, seed):
    """Random matrix with exactly ``round(density*rows*cols)`` nonzeros.

    Positions are drawn uniformly without replacement and values are i.i.d.
    uniform on [-1, 1].  Storage is sparse for ``density <= 0.5``.
    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if rows < 1 or cols < 1:
        raise ParameterError("rows and cols must be >= 1")
    if not 0 < density <= 1:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    total = rows * cols
    count = min(total, int(math.floor(density * total + 0.5)))
    flat = rng.choice(total, size=count, replace=False)
    vals = rng.uniform(-1.0, 1.0, size=count)
    vals[vals == 0.0] = 1.0
    r, c = np.divmod(flat, cols)
    if density > SPARSE_FILL_LIMIT:
        arr = np.zeros((rows, cols))
        arr[r, c] = vals
        return BlockMatrix(arr)
    return BlockMatrix(sp.coo_array((vals, (r, c)), shape=(rows, cols)))


@dataclass(frozen=True)
class BlockGrid:
    """A ``block_rows x block_cols`` grid of equally sized blocks."""

    block_rows: int
    block_cols: int
    blocks: tuple

    def __getitem__(self, index):
        i, j = index
        return self.blocks[i][j]

    @property
    def block_shape(self):
        return self.blocks[0][0].shape

    @property
    def shape(self):
        h, w = self.block_shape
        return (h * self.block_rows, w * self.block_cols)


def partition_grid(M, block_rows, block_cols):
    """Split ``M`` into a grid of contiguous blocks."""
    if block_rows < 1 or block_cols < 1:
        raise PartitionError("grid dimensions must be positive")
    if M.rows % block_rows:
        raise PartitionError(f"rows={M.rows} is not divisible by block_rows={block_rows}")
    if M.cols % block_cols:
        raise PartitionError(f"cols={M.cols} is not divisible by block_cols={block_cols}")
    h, w = M.rows // block_rows, M.cols // block_cols
    raw = M.raw
    blocks = tuple(
        tuple(BlockMatrix(raw[i * h:(i + 1) * h, j * w:(j + 1) * w]) for j in range(block_cols))
        for i in range(block_rows)
    )
    return BlockGrid(block_rows, block_cols, blocks)


def assemble_grid(grid):
    """Inverse of :func:`partition_grid`."""
    if any(b.is_sparse for row in grid.blocks for b in row):
        raw = sp.block_array([[b.raw for b in row] for row in grid.blocks], format="csr")
        return BlockMatrix(raw)
    return BlockMatrix(np.block([[b.raw for b in row] for row in grid.blocks]))


def multiply_add_count(X, Y):
    """Multiply-adds performed by the storage-aware product ``X @ Y``."""
    if X.is_sparse and Y.is_sparse:
        col_counts = np.bincount(X.raw.indices, minlength=X.cols)
        row_counts = np.diff(Y.raw.indptr)
        return int(np.dot(col_counts.astype(np.int64), row_counts.astype(np.int64)))
    if X.is_sparse:
        return X.nnz * Y.cols
    if Y.is_sparse:
        return X.rows * Y.nnz
    return X.rows * X.cols * Y.cols


def multiply(X, Y):
    """Return ``(X @ Y, multiply_add_count)``."""
    if X.cols != Y.rows:
        raise ShapeError(f"cannot multiply {X.rows}x{X.cols} by {Y.rows}x{Y.cols}")
    ops = multiply_add_count(X, Y)
    return _settle(X.raw @ Y.raw), ops


def transpose_multiply(X, Y):
    """Return ``(X.T @ Y, multiply_add_count)``."""
    return multiply(X.T, Y)


def linear_combination(coeffs, mats):
    """Weighted sum of equally shaped matrices.

    An all-sparse sum stays sparse while its fill is at most
    ``SPARSE_FILL_LIMIT``; any dense operand makes the result dense.
    """
    coeffs = list(coeffs)
    mats = list(mats)
    if not mats or len(coeffs) != len(mats):
        raise ParameterError("need one coefficient per matrix and at least one matrix")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ShapeError("all terms of a linear combination must share a shape")
    if all(m.is_sparse for m in mats):
        acc = sp.csr_array(shape, dtype=np.float64)
        for a, m in zip(coeffs, mats):
            acc = acc + float(a) * m.raw
        return _settle(acc)
    acc = np.zeros(shape)
    for a, m in zip(coeffs, mats):
        if m.is_sparse:
            acc += float(a) * m.raw.toarray()
        else:
            acc += float(a) * m.raw
    return BlockMatrix(acc)


def frobenius_norm(M):
    if M.is_sparse:
        return float(np.linalg.norm(M.raw.data))
    return float(np.linalg.norm(M.raw))


# -- Matrix Market ----------------------------------------------------------

_FIELDS = ("real", "integer", "double")


def write_matrix_market(path, M):
    """Write ``M`` as coordinate (sparse) or array (dense) Matrix Market."""
    lines = []
    if M.is_sparse:
        trip = M.triples()
        lines.append("%%MatrixMarket matrix coordinate real general")
        lines.append(f"{M.rows} {M.cols} {len(trip)}")
        lines.extend(f"{r + 1} {c + 1} {v:.17g}" for r, c, v in trip)
    else:
        lines.append("%%MatrixMarket matrix array real general")
        lines.append(f"{M.rows} {M.cols}")
        lines.extend(f"{v:.17g}" for v in M.raw.ravel(order="F"))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_ints(tokens, count, lineno, what):
    if len(tokens) != count:
        raise MatrixMarketError(f"expected {count} integers in {what}", lineno)
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise MatrixMarketError(f"non-integer value in {what}", lineno) from None


def _parse_real(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise MatrixMarketError(f"cannot parse value {token!r}", lineno) from None


def read_matrix_market(path):
    """Read a real general Matrix Market file (coordinate or array)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1].lower() != "matrix":
        raise MatrixMarketError("malformed header", 1)
    layout, field, symmetry = (h.lower() for h in header[2:])
    if layout not in ("coordinate", "array"):
        raise MatrixMarketError(f"unknown format {layout!r}", 1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r} (only real values)", 1)
    if symmetry != "general":
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", 1)

    body = [(k + 1, ln.split()) for k, ln in enumerate(lines[1:], start=1)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError("missing size line", len(lines))
    size_lineno, size_tokens = body[0]
    entries = body[1:]

    if layout == "coordinate":
        rows, cols, nnz = _parse_ints(size_tokens, 3, size_lineno, "size line")
        if len(entries) != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {len(entries)}", size_lineno)
        triples = []
        for lineno, tok in entries:
            if len(tok) != 3:
                raise MatrixMarketError("expected 'row col value'", lineno)
            r, c = _parse_ints(tok[:2], 2, lineno, "entry index")
            if not (1 <= r <= rows and 1 <= c <= cols):
                raise MatrixMarketError(f"index ({r}, {c}) out of range 1..{rows} x 1..{cols}", lineno)
            triples.append((r - 1, c - 1, _parse_real(tok[2], lineno)))
        return BlockMatrix.from_triples(rows, cols, triples)

    rows, cols = _parse_ints(size_tokens, 2, size_lineno, "size line")
    if len(entries) != rows * cols:
        raise MatrixMarketError(f"expected {rows * cols} entries, found {len(entries)}", size_lineno)
    vals = []
    for lineno, tok in entries:
        if len(tok) != 1:
            raise MatrixMarketError("expected a single value per line", lineno)
        vals.append(_parse_real(tok[0], lineno))
    return BlockMatrix(np.array(vals, dtype=np.float64).reshape((rows, cols), order="F"))
