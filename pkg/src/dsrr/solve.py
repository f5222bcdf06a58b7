"""Dual coordinate-ascent solvers for l2-regularized hinge / squared-hinge
classification, on original or reduced features, with an optional l1 dual
penalty handled through the margin-shift equivalence.

The dual-sparse problem (l1 weight tau on the dual vector) is solved by
running the ordinary solver against the shifted margin gamma = 1 - tau:
substituting alpha_i = -y_i beta_i turns the penalized dual into the
plain dual of the margin-gamma loss, so one SDCA kernel covers tau = 0
and tau > 0 alike. The duality gap is measured against the margin-gamma
primal and is the solver's convergence certificate.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import rng
from .data import LabeledDataset
from .sketch import BaseReducer, ReducedDataset
from .validation import check_labels, check_vector

__all__ = [
    "Loss",
    "HINGE",
    "SQUARED_HINGE",
    "loss_by_name",
    "SolverConfig",
    "SolveResult",
    "coordinate_step",
    "solve_original",
    "solve_reduced_sparse",
    "recover_primal",
    "naive_recover",
    "predict_error",
    "primal_objective",
    "dual_objective",
]

log = logging.getLogger(__name__)

_LOSS_SMOOTHNESS = {"hinge": math.inf, "sqhinge": 2.0}


@dataclass(frozen=True)
class Loss:
    """Loss family plus its smoothness constant L (gradient Lipschitz)."""

    kind: str
    L: float

    def __post_init__(self):
        if self.kind not in _LOSS_SMOOTHNESS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.L != _LOSS_SMOOTHNESS[self.kind]:
            raise ValueError(f"L={self.L} does not match loss {self.kind!r}")

    @property
    def smooth(self) -> bool:
        return math.isfinite(self.L)


HINGE = Loss("hinge", math.inf)
SQUARED_HINGE = Loss("sqhinge", 2.0)


def loss_by_name(name: str) -> Loss:
    if name == "hinge":
        return HINGE
    if name == "sqhinge":
        return SQUARED_HINGE
    raise ValueError(f"unknown loss {name!r} (choose hinge or sqhinge)")


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    tau: float = 0.0
    loss: Loss = HINGE
    max_epochs: int = 500
    gap_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if not 0.0 <= self.tau < 1.0:
            raise ValueError("tau must lie in [0, 1): tau >= 1 leaves no positive margin")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")


@dataclass(frozen=True)
class SolveResult:
    alpha: np.ndarray
    primal: np.ndarray
    objective: float
    dual_objective: float
    gap: float
    epochs_run: int
    converged: bool
    # hinge examples whose column norm is zero; forced to alpha_i = 0 and
    # excluded from the objective and from support accounting
    excluded: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    dual_trace: np.ndarray = field(default_factory=lambda: np.empty(0))


def coordinate_step(loss: Loss, gamma: float, beta_i: float, z_i: float, qnorm: float) -> float:
    """Exact per-coordinate maximizer of the margin-gamma dual.

    z_i is the current prediction y_i u.x_i and qnorm = ||x_i||^2/(lambda n).
    """
    if loss.kind == "hinge":
        if qnorm <= 0:
            raise ValueError("hinge step needs qnorm > 0; zero-norm examples are skipped")
        return min(1.0, max(0.0, beta_i + (gamma - z_i) / qnorm))
    return max(0.0, beta_i + (gamma - z_i - beta_i / 2.0) / (qnorm + 0.5))


def _epochs_sparse(X, y, beta, v, qn, active, gamma, inv_lam_n, hinge, perm_gen, state):
    indptr, indices, data = X.indptr, X.indices, X.data
    n = y.shape[0]
    order = perm_gen.permutation(n)
    for i in order:
        if not active[i]:
            continue
        lo, hi = indptr[i], indptr[i + 1]
        idx = indices[lo:hi]
        vals = data[lo:hi]
        z = y[i] * (v[idx] @ vals)
        b = beta[i]
        if hinge:
            bn = b + (gamma - z) / qn[i]
            bn = 0.0 if bn < 0.0 else (1.0 if bn > 1.0 else bn)
        else:
            bn = b + (gamma - z - b / 2.0) / (qn[i] + 0.5)
            if bn < 0.0:
                bn = 0.0
        if bn != b:
            beta[i] = bn
            v[idx] += ((bn - b) * y[i] * inv_lam_n) * vals


def _epochs_dense(X, y, beta, v, qn, active, gamma, inv_lam_n, hinge, perm_gen, state):
    n = y.shape[0]
    order = perm_gen.permutation(n)
    for i in order:
        if not active[i]:
            continue
        col = X[:, i]
        z = y[i] * (v @ col)
        b = beta[i]
        if hinge:
            bn = b + (gamma - z) / qn[i]
            bn = 0.0 if bn < 0.0 else (1.0 if bn > 1.0 else bn)
        else:
            bn = b + (gamma - z - b / 2.0) / (qn[i] + 0.5)
            if bn < 0.0:
                bn = 0.0
        if bn != b:
            beta[i] = bn
            v += ((bn - b) * y[i] * inv_lam_n) * col


def _column_sq_norms(X) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.multiply(X).sum(axis=0)).ravel()
    return np.einsum("ij,ij->j", X, X)


def _matvec(X, alpha) -> np.ndarray:
    return X @ alpha


def _predictions(X, v) -> np.ndarray:
    if sp.issparse(X):
        return X.T @ v
    return v @ X


def primal_objective(X, y, v, lam, loss: Loss, gamma: float = 1.0, active=None) -> float:
    """Margin-gamma primal value (1/n) sum loss_gamma(y_i v.x_i) + lam/2 ||v||^2.

    n counts all examples; entries where active is False contribute no loss
    (used for degenerate zero-norm hinge columns).
    """
    margins = y * _predictions(X, v)
    slack = np.maximum(0.0, gamma - margins)
    if loss.kind == "sqhinge":
        slack = slack**2
    if active is not None:
        slack = slack[active]
    n = y.shape[0]
    return float(slack.sum() / n + 0.5 * lam * (v @ v))


def dual_objective(y, beta, v, lam, loss: Loss, gamma: float = 1.0, active=None) -> float:
    """Margin-gamma dual value in beta form; v must equal (1/lam n) X(beta*y)."""
    terms = gamma * beta
    if loss.kind == "sqhinge":
        terms = terms - beta**2 / 4.0
    if active is not None:
        terms = terms[active]
    n = y.shape[0]
    return float(terms.sum() / n - 0.5 * lam * (v @ v))


def _run_sdca(X, y, cfg: SolverConfig, dim: int) -> SolveResult:
    n = y.shape[0]
    gamma = 1.0 - cfg.tau
    hinge = cfg.loss.kind == "hinge"
    inv_lam_n = 1.0 / (cfg.lam * n)
    sq = _column_sq_norms(X)
    qn = sq * inv_lam_n
    active = np.ones(n, dtype=bool)
    excluded = np.empty(0, dtype=np.int64)
    if hinge:
        excluded = np.nonzero(sq == 0.0)[0].astype(np.int64)
        if excluded.size:
            active[excluded] = False
            log.warning(
                "%d zero-norm example(s) excluded from hinge solve: %s",
                excluded.size,
                excluded.tolist(),
            )
    else:
        qn = np.where(sq == 0.0, 0.0, qn)

    beta = np.zeros(n)
    v = np.zeros(dim)
    perm_gen = rng.generator("sdca", cfg.seed)
    epoch_fn = _epochs_sparse if sp.issparse(X) else _epochs_dense
    Xw = X if sp.issparse(X) else np.asfortranarray(X)

    trace = []
    gap = math.inf
    primal = dual = math.nan
    epochs = 0
    for epochs in range(1, cfg.max_epochs + 1):
        epoch_fn(Xw, y, beta, v, qn, active, gamma, inv_lam_n, hinge, perm_gen, None)
        # refresh v from beta so the gap certificate is drift-free
        v = _matvec(X, beta * y) * inv_lam_n
        primal = primal_objective(X, y, v, cfg.lam, cfg.loss, gamma, active)
        dual = dual_objective(y, beta, v, cfg.lam, cfg.loss, gamma, active)
        trace.append(dual)
        gap = primal - dual
        if gap <= cfg.gap_tol:
            break

    converged = gap <= cfg.gap_tol
    if not converged:
        log.warning("no convergence after %d epochs: gap=%.3e > tol=%.3e", epochs, gap, cfg.gap_tol)
    alpha = -y * beta
    return SolveResult(
        alpha=alpha,
        primal=v,
        objective=primal,
        dual_objective=dual,
        gap=gap,
        epochs_run=epochs,
        converged=converged,
        excluded=excluded,
        dual_trace=np.asarray(trace),
    )


def solve_original(ds: LabeledDataset, cfg: SolverConfig) -> SolveResult:
    """Solve the unreduced dual to cfg.gap_tol; requires cfg.tau == 0."""
    if cfg.tau != 0.0:
        raise ValueError("solve_original requires tau = 0; use solve_reduced_sparse for tau > 0")
    return _run_sdca(ds.X, ds.y, cfg, ds.d)


def solve_reduced_sparse(rds: ReducedDataset, cfg: SolverConfig) -> SolveResult:
    """Solve the l1-penalized reduced dual via the margin gamma = 1 - tau."""
    y = check_labels(rds.y)
    return _run_sdca(rds.Xhat, y, cfg, rds.m)


def recover_primal(ds: LabeledDataset, alpha, lam: float) -> np.ndarray:
    """Dual-to-primal map w = -(1/lambda n) X alpha on the original features."""
    alpha = check_vector(alpha, ds.n, "alpha")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return -(ds.X @ alpha) / (lam * ds.n)


def naive_recover(op: BaseReducer, u) -> np.ndarray:
    """Adjoint baseline A^T u (known-poor recovery, kept for comparison)."""
    return op.adjoint_apply(u)


def predict_error(w, test: LabeledDataset) -> float:
    """Misclassification rate of sign(w.x); sign(0) counts as an error."""
    if test.n == 0:
        raise ValueError("empty test set")
    w = check_vector(w, test.d, "w")
    margins = test.y * (test.X.T @ w)
    return float(np.mean(margins <= 0.0))
