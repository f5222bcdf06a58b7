"""Seeded randomized reduction operators A: R^d -> R^m.

Six kinds: three dense sub-Gaussian projections (Gaussian, Rademacher,
sparse discrete), a signed feature-hashing map, a subsampled randomized
Hadamard transform, and plain scaled coordinate sampling. All randomness
is a pure function of (kind, seed) through counter-based streams, so an
operator is fully described by its (kind, d, m, seed) header.

Operators double as sklearn transformers: ``fit`` infers d from row-major
input and ``transform`` maps (n_samples, d) to (n_samples, m). The
library-internal convention is columns-as-examples; ``apply_columns``
and the module-level ``apply``/``apply_dataset`` work in that layout.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin

from . import rng
from .data import LabeledDataset, SparseVector
from .validation import check_vector

__all__ = [
    "GaussianProjection",
    "RademacherProjection",
    "SparseDiscreteProjection",
    "HashingHD",
    "HadamardPHD",
    "SamplingP",
    "IdentityEmbedding",
    "ExplicitMatrix",
    "ReducedDataset",
    "JLDiagnostic",
    "make_operator",
    "apply",
    "apply_dataset",
    "jl_distortion",
    "fwht",
]

# Dense projections cache their matrix up to this many entries; beyond it
# rows are regenerated blockwise from the same counter positions, so both
# paths see bit-identical entries.
DENSE_ENTRY_LIMIT = 2**26
_BLOCK_ENTRIES = 2**20

_JL_QUANTILES = (0.5, 0.9, 0.99)


def fwht(a: np.ndarray) -> np.ndarray:
    """In-place Walsh-Hadamard transform along axis 0 (length a power of two).

    Unnormalized butterfly; matches scipy.linalg.hadamard(n) @ a.
    """
    n = a.shape[0]
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        view = a.reshape(n // (2 * h), 2 * h, *a.shape[1:])
        top = view[:, :h].copy()
        view[:, :h] += view[:, h:]
        view[:, h:] *= -1.0
        view[:, h:] += top
        h *= 2
    return a


def _next_pow2(d: int) -> int:
    return 1 << max(0, (d - 1).bit_length())


@dataclass(frozen=True)
class ReducedDataset:
    """Dense m x n reduced example matrix plus the original labels."""

    Xhat: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.Xhat.ndim != 2 or self.Xhat.shape[1] != self.y.shape[0]:
            raise ValueError("Xhat must be m x n with one label per column")

    @property
    def m(self) -> int:
        return self.Xhat.shape[0]

    @property
    def n(self) -> int:
        return self.Xhat.shape[1]


@dataclass(frozen=True)
class JLDiagnostic:
    """Empirical distortion profile of one operator over a probe set."""

    kind: str
    d: int
    m: int
    seed: int
    distortions: np.ndarray
    quantiles: dict
    R: float
    max_inf_ratio: float


class BaseReducer(BaseEstimator, TransformerMixin):
    """Common seeded-operator machinery; subclasses define the linear map."""

    kind = "base"

    def __init__(self, m: int, seed: int = 0):
        self.m = m
        self.seed = seed

    # -- sklearn surface -------------------------------------------------
    def fit(self, X, y=None):
        X = sp.csr_matrix(X) if sp.issparse(X) else np.asarray(X)
        if X.ndim != 2:
            raise ValueError("expected a 2-D (n_samples, d) matrix")
        return self.fit_dim(X.shape[1])

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        cols = sp.csc_matrix(X, dtype=float).T
        if cols.shape[0] != self.d_:
            raise ValueError(f"X has {cols.shape[0]} features, operator expects {self.d_}")
        return self.apply_columns(cols).T

    # -- operator surface ------------------------------------------------
    def fit_dim(self, d: int):
        """Materialize the operator for input dimension d."""
        if self.m < 1 or d < 1:
            raise ValueError("require m >= 1 and d >= 1")
        self.d_ = int(d)
        self._materialize()
        return self

    def header(self) -> str:
        """Replayable text header."""
        self._check_fitted()
        return f"{self.kind},{self.d_},{self.m},{self.seed}"

    def apply(self, x) -> np.ndarray:
        """Map one example (SparseVector or length-d array) to R^m."""
        self._check_fitted()
        if isinstance(x, SparseVector):
            if x.dim != self.d_:
                raise ValueError(f"x has dim {x.dim}, operator expects {self.d_}")
            return self._apply_sparse(x.indices, x.values)
        arr = check_vector(x, self.d_, "x")
        nz = np.nonzero(arr)[0]
        return self._apply_sparse(nz, arr[nz])

    def apply_columns(self, X: sp.csc_matrix) -> np.ndarray:
        """Map a d x n column matrix to the dense m x n reduced matrix."""
        self._check_fitted()
        if X.shape[0] != self.d_:
            raise ValueError(f"X has dimension {X.shape[0]}, operator expects {self.d_}")
        return self._apply_matrix(X)

    def adjoint_apply(self, u) -> np.ndarray:
        """Apply the exact adjoint A^T to an m-vector."""
        self._check_fitted()
        return self._adjoint(check_vector(u, self.m, "u"))

    def _check_fitted(self):
        if not hasattr(self, "d_"):
            raise ValueError(f"{type(self).__name__} is not fitted; call fit or fit_dim first")

    # subclass hooks
    def _materialize(self):
        pass

    def _apply_sparse(self, indices, values):
        raise NotImplementedError

    def _apply_matrix(self, X):
        # generic column loop; dense kinds override with one matmul
        out = np.empty((self.m, X.shape[1]), order="F")
        for i in range(X.shape[1]):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            out[:, i] = self._apply_sparse(X.indices[lo:hi], X.data[lo:hi])
        return out

    def _adjoint(self, u):
        raise NotImplementedError


class _DenseProjection(BaseReducer):
    """Projection with iid entries; cached or regenerated in row blocks."""

    def _entry_stream(self, start: int, count: int) -> np.ndarray:
        raise NotImplementedError

    def _materialize(self):
        self._key = rng.stream_key(f"{self.kind}/matrix", self.seed)
        total = self.m * self.d_
        if total <= DENSE_ENTRY_LIMIT:
            mat = self._entry_stream(0, total).reshape(self.m, self.d_)
            mat.flags.writeable = False
            self._matrix = mat
        else:
            self._matrix = None

    def _row_block(self, lo: int, hi: int) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix[lo:hi]
        d = self.d_
        return self._entry_stream(lo * d, (hi - lo) * d).reshape(hi - lo, d)

    def _iter_blocks(self):
        step = max(1, _BLOCK_ENTRIES // self.d_)
        for lo in range(0, self.m, step):
            hi = min(self.m, lo + step)
            yield lo, hi, self._row_block(lo, hi)

    def _apply_sparse(self, indices, values):
        if self._matrix is not None:
            return self._matrix[:, indices] @ values
        out = np.empty(self.m)
        for lo, hi, block in self._iter_blocks():
            out[lo:hi] = block[:, indices] @ values
        return out

    def _apply_matrix(self, X):
        if self._matrix is not None:
            return np.asfortranarray(self._matrix @ X)
        out = np.empty((self.m, X.shape[1]), order="F")
        for lo, hi, block in self._iter_blocks():
            out[lo:hi, :] = block @ X
        return out

    def _adjoint(self, u):
        if self._matrix is not None:
            return self._matrix.T @ u
        out = np.zeros(self.d_)
        for lo, hi, block in self._iter_blocks():
            out += block.T @ u[lo:hi]
        return out


class GaussianProjection(_DenseProjection):
    """Entries iid N(0, 1/m)."""

    kind = "gauss"

    def _entry_stream(self, start, count):
        return rng.normal_block(self._key, start, count) / np.sqrt(self.m)


class RademacherProjection(_DenseProjection):
    """Entries iid +-1/sqrt(m) with equal probability."""

    kind = "rademacher"

    def _entry_stream(self, start, count):
        u = rng.uniform_block(self._key, start, count)
        return np.where(u < 0.5, 1.0, -1.0) / np.sqrt(self.m)


class SparseDiscreteProjection(_DenseProjection):
    """Entries +-sqrt(3/m) with probability 1/6 each, zero otherwise."""

    kind = "discrete"

    def _entry_stream(self, start, count):
        u = rng.uniform_block(self._key, start, count)
        root = np.sqrt(3.0 / self.m)
        return np.where(u < 1 / 6, root, np.where(u < 1 / 3, -root, 0.0))


class HashingHD(BaseReducer):
    """Signed feature hashing: (Ax)_i = sum over j with h(j)=i of x_j xi_j."""

    kind = "hash"

    def _materialize(self):
        d, m = self.d_, self.m
        buckets = rng.uniform_block(rng.stream_key("hash/buckets", self.seed), 0, d)
        signs = rng.uniform_block(rng.stream_key("hash/signs", self.seed), 0, d)
        self.h_ = np.minimum((buckets * m).astype(np.int64), m - 1)
        self.xi_ = np.where(signs < 0.5, 1.0, -1.0)
        self.h_.flags.writeable = False
        self.xi_.flags.writeable = False

    def _apply_sparse(self, indices, values):
        out = np.zeros(self.m)
        np.add.at(out, self.h_[indices], self.xi_[indices] * values)
        return out

    def _apply_matrix(self, X):
        S = sp.csc_matrix(
            (self.xi_, (self.h_, np.arange(self.d_))), shape=(self.m, self.d_)
        )
        return np.asfortranarray((S @ X).toarray())

    def _adjoint(self, u):
        return self.xi_ * u[self.h_]


class HadamardPHD(BaseReducer):
    """Subsampled randomized Hadamard transform.

    x is zero-padded to d_pad (next power of two), sign-flipped by a
    random diagonal, run through the orthonormal Walsh-Hadamard transform,
    and m of the d_pad coordinates are sampled with replacement. The
    sqrt(d_pad/m) scale makes E||Ax||^2 = ||x||^2; it equals the usual
    sqrt(d/m) whenever d is already a power of two.
    """

    kind = "hadamard"

    def _materialize(self):
        self.d_pad_ = _next_pow2(self.d_)
        signs = rng.uniform_block(rng.stream_key("hadamard/signs", self.seed), 0, self.d_)
        picks = rng.uniform_block(rng.stream_key("hadamard/coords", self.seed), 0, self.m)
        self.signs_ = np.where(signs < 0.5, 1.0, -1.0)
        self.coords_ = np.minimum((picks * self.d_pad_).astype(np.int64), self.d_pad_ - 1)
        self.signs_.flags.writeable = False
        self.coords_.flags.writeable = False
        self._scale = np.sqrt(self.d_pad_ / self.m)
        self._root = np.sqrt(self.d_pad_)

    def transformed_padded(self, x) -> np.ndarray:
        """Orthonormal FWHT of the padded, sign-flipped input (pre-sampling)."""
        self._check_fitted()
        arr = check_vector(x, self.d_, "x") if not isinstance(x, SparseVector) else x.to_dense()
        z = np.zeros(self.d_pad_)
        z[: self.d_] = self.signs_ * arr
        return fwht(z) / self._root

    def _apply_sparse(self, indices, values):
        z = np.zeros(self.d_pad_)
        z[indices] = self.signs_[indices] * values
        fwht(z)
        return (self._scale / self._root) * z[self.coords_]

    def _apply_matrix(self, X):
        Z = np.zeros((self.d_pad_, X.shape[1]))
        Z[: self.d_, :] = X.toarray() * self.signs_[:, None]
        fwht(Z)
        return np.asfortranarray((self._scale / self._root) * Z[self.coords_, :])

    def _adjoint(self, u):
        v = np.zeros(self.d_pad_)
        np.add.at(v, self.coords_, u)
        fwht(v)
        v *= self._scale / self._root
        return self.signs_ * v[: self.d_]


class SamplingP(BaseReducer):
    """Scaled coordinate sampling with replacement: (Ax)_i = sqrt(d/m) x_{c_i}."""

    kind = "sample"

    def _materialize(self):
        if self.m > self.d_:
            raise ValueError("SamplingP requires m <= d")
        picks = rng.uniform_block(rng.stream_key("sample/coords", self.seed), 0, self.m)
        self.coords_ = np.minimum((picks * self.d_).astype(np.int64), self.d_ - 1)
        self.coords_.flags.writeable = False
        self._scale = np.sqrt(self.d_ / self.m)

    def _apply_sparse(self, indices, values):
        pos = np.searchsorted(indices, self.coords_)
        pos_c = np.minimum(pos, indices.size - 1) if indices.size else pos
        out = np.zeros(self.m)
        if indices.size:
            hit = indices[pos_c] == self.coords_
            out[hit] = values[pos_c[hit]]
        return self._scale * out

    def _apply_matrix(self, X):
        return np.asfortranarray(self._scale * X[self.coords_, :].toarray())

    def _adjoint(self, u):
        out = np.zeros(self.d_)
        np.add.at(out, self.coords_, u)
        return self._scale * out


class IdentityEmbedding(BaseReducer):
    """Lossless embedding (m = d, A = I); test hook and sweep baseline."""

    kind = "identity"

    def __init__(self, m: int | None = None, seed: int = 0):
        super().__init__(m if m is not None else -1, seed)

    def fit_dim(self, d: int):
        if self.m == -1:
            self.m = int(d)
        if self.m != d:
            raise ValueError("IdentityEmbedding requires m == d")
        return super().fit_dim(d)

    def _apply_sparse(self, indices, values):
        out = np.zeros(self.m)
        out[indices] = values
        return out

    def _apply_matrix(self, X):
        return np.asfortranarray(X.toarray())

    def _adjoint(self, u):
        return u.copy()


class ExplicitMatrix(BaseReducer):
    """Operator with caller-supplied entries; not seeded, test hook only."""

    kind = "explicit"

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=float)
        super().__init__(self.matrix.shape[0], seed=0)
        self.fit_dim(self.matrix.shape[1])

    def header(self) -> str:
        raise ValueError("ExplicitMatrix has no replayable (kind,d,m,seed) header")

    def _apply_sparse(self, indices, values):
        return self.matrix[:, indices] @ values

    def _apply_matrix(self, X):
        return np.asfortranarray(self.matrix @ X)

    def _adjoint(self, u):
        return self.matrix.T @ u


_KINDS = {
    cls.kind: cls
    for cls in (
        GaussianProjection,
        RademacherProjection,
        SparseDiscreteProjection,
        HashingHD,
        HadamardPHD,
        SamplingP,
        IdentityEmbedding,
    )
}


def make_operator(kind: str, d: int, m: int, seed: int) -> BaseReducer:
    """Build and materialize a seeded operator by kind name."""
    if kind not in _KINDS:
        raise ValueError(f"unknown operator kind {kind!r}; choose from {sorted(_KINDS)}")
    cls = _KINDS[kind]
    op = cls(m=m, seed=seed)
    return op.fit_dim(d)


def apply(op: BaseReducer, x) -> np.ndarray:
    return op.apply(x)


def apply_dataset(op: BaseReducer, ds: LabeledDataset) -> ReducedDataset:
    """Reduce every example; columns of the result line up with ds."""
    return ReducedDataset(op.apply_columns(ds.X), ds.y.copy())


def jl_distortion(op: BaseReducer, probes) -> JLDiagnostic:
    """Relative squared-norm distortions | ||Ax||^2 - ||x||^2 | / ||x||^2."""
    if len(probes) == 0:
        raise ValueError("need at least one probe vector")
    dist = np.empty(len(probes))
    norms = np.empty(len(probes))
    inf_ratio = 0.0
    for i, p in enumerate(probes):
        dense = p.to_dense() if isinstance(p, SparseVector) else np.asarray(p, dtype=float)
        nsq = float(dense @ dense)
        if nsq == 0.0:
            raise ValueError(f"probe {i} is the zero vector")
        ax = op.apply(p)
        dist[i] = abs(ax @ ax - nsq) / nsq
        norms[i] = np.sqrt(nsq)
        inf_ratio = max(inf_ratio, np.abs(dense).max() / norms[i])
    quants = {q: float(np.quantile(dist, q)) for q in _JL_QUANTILES}
    return JLDiagnostic(
        kind=op.kind,
        d=op.d_,
        m=op.m,
        seed=op.seed,
        distortions=dist,
        quantiles=quants,
        R=float(norms.max()),
        max_inf_ratio=float(inf_ratio),
    )
