"""Sparse labeled datasets: svmlight parsing, normalization, partitioning,
and a synthetic generator with controllable dual sparsity.

Examples are columns. A LabeledDataset stores the d x n example matrix in
csc form so per-example index/value slices are cheap, which is the access
pattern of every solver in this package.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import rng
from .validation import check_labels

__all__ = [
    "SparseVector",
    "LabeledDataset",
    "DatasetCard",
    "parse_svmlight",
    "serialize_svmlight",
    "normalize_l2",
    "partition",
    "partition_indices",
    "synth_sparse_dual",
]


@dataclass(frozen=True)
class SparseVector:
    """One example: strictly ascending 0-based indices, nonzero values."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=float)
        if idx.shape != val.shape:
            raise ValueError("indices and values must have equal length")
        if idx.size:
            if idx[-1] >= self.dim or idx[0] < 0:
                raise ValueError("index out of range for dim")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly ascending")
        if np.any(val == 0.0):
            raise ValueError("explicit zeros are not stored")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @property
    def nnz(self) -> int:
        return self.indices.size

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


class LabeledDataset:
    """Immutable column-oriented dataset: X is d x n, labels are +-1."""

    def __init__(self, X, y, d: int | None = None):
        mat = sp.csc_matrix(X, dtype=float)
        if d is not None:
            if d < mat.shape[0]:
                raise ValueError(f"override d={d} smaller than observed dimension {mat.shape[0]}")
            mat.resize((d, mat.shape[1]))
        mat.eliminate_zeros()
        mat.sort_indices()
        self._X = mat
        self._y = check_labels(y, n=mat.shape[1])
        self._X.data.flags.writeable = False
        self._y.flags.writeable = False

    @property
    def X(self) -> sp.csc_matrix:
        return self._X

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def n(self) -> int:
        return self._X.shape[1]

    @property
    def d(self) -> int:
        return self._X.shape[0]

    def example(self, i: int) -> SparseVector:
        lo, hi = self._X.indptr[i], self._X.indptr[i + 1]
        return SparseVector(self._X.indices[lo:hi].astype(np.int64), self._X.data[lo:hi].copy(), self.d)

    def examples(self):
        return [self.example(i) for i in range(self.n)]

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self._X[:, idx], self._y[idx])

    def column_norms(self) -> np.ndarray:
        sq = self._X.multiply(self._X)
        return np.sqrt(np.asarray(sq.sum(axis=0)).ravel())

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.d == other.d
            and self.n == other.n
            and np.array_equal(self._y, other._y)
            and (self._X != other._X).nnz == 0
        )

    def __repr__(self):
        return f"LabeledDataset(n={self.n}, d={self.d}, nnz={self._X.nnz})"


@dataclass(frozen=True)
class DatasetCard:
    """Header-level facts about a train/test pair, echoed into reports."""

    name: str
    n_train: int
    n_test: int
    d: int
    n_nodes: int

    def __post_init__(self):
        for fname in ("n_train", "n_test", "d", "n_nodes"):
            if getattr(self, fname) <= 0:
                raise ValueError(f"{fname} must be positive")


def parse_svmlight(text, d: int | None = None) -> LabeledDataset:
    """Parse svmlight/libsvm text: `<label> <idx>:<val> ...`, indices 1-based.

    Labels 1/+1 map to +1 and -1/0 map to -1. d defaults to the largest
    index seen; pass d explicitly when train and test files must agree on
    dimensionality.

    Raises ValueError with the offending 1-based line number on malformed
    tokens or duplicate indices within a line.
    """
    if hasattr(text, "read"):
        text = text.read()
    labels: list[float] = []
    col_indices: list[np.ndarray] = []
    col_values: list[np.ndarray] = []
    max_index = 0
    for lineno, raw in enumerate(str(text).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            lab = float(tokens[0])
        except ValueError:
            raise ValueError(f"line {lineno}: unparseable label {tokens[0]!r}") from None
        if lab == 1.0:
            labels.append(1.0)
        elif lab in (-1.0, 0.0):
            labels.append(-1.0)
        else:
            raise ValueError(f"line {lineno}: label {tokens[0]!r} is not one of 1/+1/-1/0")
        idx = []
        val = []
        for tok in tokens[1:]:
            head, sep, tail = tok.partition(":")
            if not sep:
                raise ValueError(f"line {lineno}: expected idx:val, got {tok!r}")
            try:
                i = int(head)
                v = float(tail)
            except ValueError:
                raise ValueError(f"line {lineno}: malformed feature {tok!r}") from None
            if i < 1:
                raise ValueError(f"line {lineno}: index {i} is not 1-based positive")
            idx.append(i - 1)
            val.append(v)
        idx_arr = np.asarray(idx, dtype=np.int64)
        if idx_arr.size:
            order = np.argsort(idx_arr, kind="stable")
            idx_arr = idx_arr[order]
            val_arr = np.asarray(val)[order]
            if np.any(np.diff(idx_arr) == 0):
                dup = int(idx_arr[np.nonzero(np.diff(idx_arr) == 0)[0][0]]) + 1
                raise ValueError(f"line {lineno}: duplicate index {dup}")
            max_index = max(max_index, int(idx_arr[-1]) + 1)
        else:
            val_arr = np.asarray(val)
        col_indices.append(idx_arr)
        col_values.append(val_arr)

    n = len(labels)
    dim = max_index if d is None else d
    if d is not None and d < max_index:
        raise ValueError(f"override d={d} smaller than largest observed index {max_index}")
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i, ci in enumerate(col_indices):
        indptr[i + 1] = indptr[i] + ci.size
    data = np.concatenate(col_values) if n else np.empty(0)
    indices = np.concatenate(col_indices) if n else np.empty(0, dtype=np.int64)
    X = sp.csc_matrix((data, indices, indptr), shape=(dim, n))
    return LabeledDataset(X, np.asarray(labels))


def serialize_svmlight(ds: LabeledDataset) -> str:
    """Inverse of parse_svmlight (1-based indices, full-precision values)."""
    lines = []
    for i in range(ds.n):
        ex = ds.example(i)
        label = "+1" if ds.y[i] > 0 else "-1"
        feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(ex.indices, ex.values))
        lines.append(f"{label} {feats}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def normalize_l2(ds: LabeledDataset) -> LabeledDataset:
    """Scale every nonempty example to unit l2 norm; empty columns pass through."""
    norms = ds.column_norms()
    scale = np.ones_like(norms)
    nz = norms > 0
    scale[nz] = 1.0 / norms[nz]
    X = ds.X.copy()
    X.data = X.data * np.repeat(scale, np.diff(X.indptr))
    return LabeledDataset(X, ds.y)


def partition_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded disjoint cover of range(n) into k parts, sizes differing by <= 1.

    Membership comes from a seeded shuffle; within each part indices are
    sorted ascending, so k=1 reproduces the input order exactly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    perm = rng.generator("partition", seed).permutation(n)
    base, extra = divmod(n, k)
    parts = []
    stop = 0
    for j in range(k):
        start, stop = stop, stop + base + (1 if j < extra else 0)
        parts.append(np.sort(perm[start:stop]))
    return parts


def partition(ds: LabeledDataset, k: int, seed: int) -> list[LabeledDataset]:
    return [ds.subset(idx) for idx in partition_indices(ds.n, k, seed)]


# Tuned against the solver oracle: n=200, d=50, s_target=20, lambda=0.01
# must land |support| in [10, 40] at duality gap 1e-9.
_SLAB_LO = 0.15
_SLAB_HI = 0.45


def synth_sparse_dual(
    n: int, d: int, s_target: int, margin: float, noise: float, seed: int
) -> LabeledDataset:
    """Two unit-normalized Gaussian blobs at +-margin plus a thin slab of
    near-boundary points, sized so roughly s_target examples end up on or
    inside the margin of the solved classifier. The achieved support size
    is a property of the solve; measure it post hoc rather than assuming.
    """
    if not 0 < s_target <= n:
        raise ValueError("require 0 < s_target <= n")
    if margin <= 0:
        raise ValueError("margin must be positive")
    gen = rng.generator("synth", seed)
    mu = gen.standard_normal(d)
    mu /= np.linalg.norm(mu)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    noise_part = gen.standard_normal((n, d)) / np.sqrt(d)
    along = np.full(n, float(margin))
    # The slab sits at a small fraction of the separation, inside the
    # eventual margin; its examples are the intended support vectors.
    along[:s_target] = margin * gen.uniform(_SLAB_LO, _SLAB_HI, size=s_target)
    Xrows = (y * along)[:, None] * mu[None, :] + noise * noise_part
    norms = np.linalg.norm(Xrows, axis=1)
    norms[norms == 0] = 1.0
    Xrows /= norms[:, None]
    return LabeledDataset(sp.csc_matrix(Xrows.T), y)
