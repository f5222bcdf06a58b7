"""Recovery-error diagnostics for reduced dual solutions.

Everything here is a pure function of converged solver output: the
perturbation vector Delta, the minimal regularization tau, support and
cone diagnostics with their error bounds, the near-sparsity residual xi,
and brute-force restricted eigenvalues / sketch distortion at a given
sparsity level.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset
from .solve import SQUARED_HINGE, Loss, recover_primal
from .validation import check_vector

# multiplicative slack applied to the bound side of every inequality check
SLACK = 1.0 + 1e-9

SUPPORT_PAIR_BUDGET = 2 * 10**6
SUPPORT_BUDGET = 10**6


@dataclass(frozen=True)
class TheoremReport:
    """Cone and error-bound diagnostics for one (alpha_tilde, alpha_star) pair.

    Bound values use the smoothness constant L of the loss; for a
    non-smooth loss the four bound flags are None and only the cone
    ratio is checked.  A flag passes only when tau_used >= tau_min in
    addition to its inequality.
    """

    delta_inf: float
    tau_used: float
    tau_min: float
    xi: float
    s: int
    S: np.ndarray
    cone_ratio: float
    err2: float
    err1: float
    err_S: float
    err_Sc: float
    bound2: float
    bound1: float
    bound_S: float
    bound_Sc: float
    flags: dict = field(default_factory=dict)

    @property
    def tau_ok(self):
        return self.tau_used >= self.tau_min

    @property
    def passed(self):
        return all(v for v in self.flags.values() if v is not None) and self.tau_ok


@dataclass(frozen=True)
class RestrictedSpectrumReport:
    """Extreme restricted eigenvalues and sketch distortion at one level.

    rho_plus / rho_minus are the max / min eigenvalues of s x s Gram
    blocks (1/n) X_T^T X_T over all size-s supports T, i.e. the exact
    sup / inf over exactly-s-sparse unit vectors.  sigma_s is the
    matching sup of |a1^T U a2| with U = (X^T X - Xhat^T Xhat)/n, None
    when no operator was given.  Values over the convex hull of that
    vector set lie within relaxation_factor of these.
    """

    s: int
    rho_plus: float
    rho_minus: float
    sigma_s: float | None
    kappa: float
    relaxation_factor: int = 4


@dataclass(frozen=True)
class NonsmoothCondition:
    """Spectrum-gap condition and the hinge error bounds it implies."""

    holds: bool
    margin: float  # rho_minus - sigma at level 16s
    bound2: float
    bound1: float


def delta_vector(ds: LabeledDataset, op, w_star) -> np.ndarray:
    """Per-example perturbation Delta_i = (A x_i) . (A w*) - x_i . w*.

    Computed as X^T (A^T(A w*) - w*): one forward and one adjoint
    application plus n sparse dot products, never forming a Gram matrix.
    """
    w = check_vector(w_star, ds.d, "w_star")
    back = op.adjoint_apply(op.apply(w))
    return np.asarray(ds.X.T @ (back - w)).ravel()


def tau_min(delta, xi: float = 0.0) -> float:
    """Smallest tau the recovery theory needs: 2 ||Delta||_inf + 2 xi."""
    d = np.asarray(delta, dtype=np.float64).ravel()
    inf_norm = float(np.max(np.abs(d))) if d.size else 0.0
    return 2.0 * inf_norm + 2.0 * float(xi)


def support_set(alpha, rel_tol: float = 1e-8) -> np.ndarray:
    """Indices with |alpha_i| above rel_tol times the largest magnitude."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0,1), got {rel_tol}")
    a = np.abs(np.asarray(alpha, dtype=np.float64).ravel())
    peak = float(a.max()) if a.size else 0.0
    if peak == 0.0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(a > rel_tol * peak).astype(np.int64)


def _l1(v) -> float:
    return float(np.sum(np.abs(v)))


def cone_ratio(alpha_tilde, alpha_star, S: np.ndarray) -> float:
    """||alpha_tilde off S||_1 over ||(alpha_tilde - alpha_star) on S||_1.

    0/0 is 0 (exact recovery); a nonzero numerator over a zero
    denominator is +inf.
    """
    at = np.asarray(alpha_tilde, dtype=np.float64).ravel()
    ast = np.asarray(alpha_star, dtype=np.float64).ravel()
    if at.shape != ast.shape:
        raise ValueError(f"vector length mismatch: {at.shape} vs {ast.shape}")
    on = np.zeros(at.size, dtype=bool)
    on[np.asarray(S, dtype=np.int64).ravel()] = True
    num = _l1(at[~on])
    den = _l1(at[on] - ast[on])
    if num == 0.0 and den == 0.0:
        return 0.0
    if den == 0.0:
        return math.inf
    return num / den


def cone_and_bounds(
    alpha_tilde,
    alpha_star,
    S: np.ndarray,
    tau: float,
    L: float,
    delta_inf: float = 0.0,
    xi: float = 0.0,
) -> TheoremReport:
    """Cone ratio and the four recovery-error bounds at support S.

    delta_inf and xi feed the tau_min recorded in the report; with the
    defaults tau_min is 0 and the flags reduce to the inequalities
    alone.  A finite L yields bound values 3*tau*L*sqrt(s), 12*tau*L*s,
    3*tau*L*s and 9*tau*L*s; an infinite L (hinge) leaves the bound
    flags None and only the cone ratio is judged.
    """
    at = np.asarray(alpha_tilde, dtype=np.float64).ravel()
    ast = np.asarray(alpha_star, dtype=np.float64).ravel()
    if at.shape != ast.shape:
        raise ValueError(f"vector length mismatch: {at.shape} vs {ast.shape}")
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    n = at.size
    S = np.asarray(S, dtype=np.int64).ravel()
    if S.size and (S.min() < 0 or S.max() >= n):
        raise ValueError("support index out of range")
    on = np.zeros(n, dtype=bool)
    on[S] = True

    ratio = cone_ratio(at, ast, S)
    diff = at - ast
    err2 = float(np.linalg.norm(diff))
    err1 = _l1(diff)
    err_S = _l1(diff[on])
    err_Sc = _l1(at[~on])

    s = int(S.size)
    t_min = 2.0 * float(delta_inf) + 2.0 * float(xi)
    tau_ok = tau >= t_min

    if math.isfinite(L):
        bound2 = 3.0 * tau * L * math.sqrt(s)
        bound1 = 12.0 * tau * L * s
        bound_S = 3.0 * tau * L * s
        bound_Sc = 9.0 * tau * L * s
        flags = {
            "cone": tau_ok and ratio <= 3.0 * SLACK,
            "err2": tau_ok and err2 <= bound2 * SLACK,
            "err1": tau_ok and err1 <= bound1 * SLACK,
            "err_S": tau_ok and err_S <= bound_S * SLACK,
            "err_Sc": tau_ok and err_Sc <= bound_Sc * SLACK,
        }
    else:
        bound2 = bound1 = bound_S = bound_Sc = math.inf
        flags = {
            "cone": tau_ok and ratio <= 3.0 * SLACK,
            "err2": None,
            "err1": None,
            "err_S": None,
            "err_Sc": None,
        }

    return TheoremReport(
        delta_inf=float(delta_inf),
        tau_used=float(tau),
        tau_min=t_min,
        xi=float(xi),
        s=s,
        S=S,
        cone_ratio=ratio,
        err2=err2,
        err1=err1,
        err_S=err_S,
        err_Sc=err_Sc,
        bound2=bound2,
        bound1=bound1,
        bound_S=bound_S,
        bound_Sc=bound_Sc,
        flags=flags,
    )


def near_sparsity_xi(
    ds: LabeledDataset, alpha_star, s: int, lam: float, loss: Loss = SQUARED_HINGE
):
    """Top-s truncation alpha^s of alpha_star and its optimality residual xi.

    xi is the infinity norm of the dual optimality residual at alpha^s:
    at coordinates kept, grad l*_i(alpha_i) - x_i . w(alpha^s); at
    zeroed coordinates the distance to the subdifferential at 0, which
    for the squared hinge is max(0, 1 - y_i x_i . w(alpha^s)).  Ties in
    the top-s selection break toward the lower index.
    """
    if not loss.smooth:
        raise ValueError("near-sparsity residual requires a smooth loss")
    alpha = check_vector(alpha_star, ds.n, "alpha_star")
    if not 0 <= s <= ds.n:
        raise ValueError(f"s must lie in [0, {ds.n}], got {s}")

    order = np.argsort(-np.abs(alpha), kind="stable")[:s]
    alpha_s = np.zeros_like(alpha)
    alpha_s[order] = alpha[order]

    w_s = recover_primal(ds, alpha_s, lam)
    t = np.asarray(ds.X.T @ w_s).ravel()
    y = ds.y
    kept = alpha_s != 0.0
    resid = np.where(kept, y + alpha_s / 2.0 - t, np.maximum(0.0, 1.0 - y * t))
    xi = float(np.max(np.abs(resid))) if resid.size else 0.0
    return alpha_s, xi


def _enumerate_supports(n: int, s: int):
    count = math.comb(n, s)
    if count > SUPPORT_BUDGET:
        raise ValueError(
            f"support enumeration budget exceeded: C({n},{s}) = {count} > {SUPPORT_BUDGET}"
        )
    return [np.array(t, dtype=np.int64) for t in itertools.combinations(range(n), s)]


def restricted_spectrum_bruteforce(
    ds: LabeledDataset, op, s: int
) -> RestrictedSpectrumReport:
    """Exact restricted eigenvalues (and sketch distortion) at level s.

    Enumerates every size-s support T: rho_plus / rho_minus are the
    extreme eigenvalues of the Gram blocks (1/n) X_T^T X_T, and with an
    operator sigma_s additionally maximizes the largest singular value
    of (T1, T2) blocks of U = (X^T X - Xhat^T Xhat)/n over unordered
    support pairs (U is symmetric).  Exponential in s; guarded by an
    explicit enumeration budget.
    """
    n = ds.n
    if not 1 <= s <= n:
        raise ValueError(f"sparsity level must lie in [1, {n}], got {s}")
    supports = _enumerate_supports(n, s)

    G = np.asarray((ds.X.T @ ds.X).todense(), dtype=np.float64) / n
    rho_plus = -math.inf
    rho_minus = math.inf
    for T in supports:
        block = G[np.ix_(T, T)]
        ev = np.linalg.eigvalsh(block)
        rho_plus = max(rho_plus, float(ev[-1]))
        rho_minus = min(rho_minus, float(ev[0]))
    rho_minus = max(rho_minus, 0.0)  # clip eigh round-off on PSD blocks

    sigma_s = None
    if op is not None:
        pair_count = len(supports) * (len(supports) + 1) // 2
        if pair_count > SUPPORT_PAIR_BUDGET:
            raise ValueError(
                f"support pair budget exceeded: {pair_count} > {SUPPORT_PAIR_BUDGET}"
            )
        Xhat = op.apply_columns(ds.X)
        U = G - (Xhat.T @ Xhat) / n
        best = 0.0
        for T1, T2 in itertools.combinations_with_replacement(supports, 2):
            block = U[np.ix_(T1, T2)]
            sv = np.linalg.svd(block, compute_uv=False)
            best = max(best, float(sv[0]))
        sigma_s = best

    kappa = rho_plus / rho_minus if rho_minus > 0.0 else math.inf
    return RestrictedSpectrumReport(
        s=s,
        rho_plus=rho_plus,
        rho_minus=rho_minus,
        sigma_s=sigma_s,
        kappa=kappa,
    )


def check_nonsmooth_condition(
    report: RestrictedSpectrumReport, s: int, lam: float, tau: float
) -> NonsmoothCondition:
    """Hinge recovery bounds from a level-16s spectrum report.

    Requires report.s == 16 s and an operator-bearing report.  When
    sigma < rho_minus at that level the bounds are
    3 lam tau sqrt(s) / (2 (rho_minus - sigma)) and
    6 lam tau s / (rho_minus - sigma); otherwise the condition fails
    and both bounds are infinite.
    """
    if report.sigma_s is None:
        raise ValueError("spectrum report carries no operator distortion")
    if report.s != 16 * s:
        raise ValueError(f"report level {report.s} is not 16*s = {16 * s}")
    margin = report.rho_minus - report.sigma_s
    if margin > 0.0:
        bound2 = 3.0 * lam * tau * math.sqrt(s) / (2.0 * margin)
        bound1 = 6.0 * lam * tau * s / margin
        return NonsmoothCondition(holds=True, margin=margin, bound2=bound2, bound1=bound1)
    return NonsmoothCondition(holds=False, margin=margin, bound2=math.inf, bound1=math.inf)


def max_singular_value(ds: LabeledDataset) -> float:
    """Largest singular value of the data matrix, by dense SVD.

    Densifies d x n, so desk scale only.
    """
    dense = ds.X.toarray()
    return float(np.linalg.svd(dense, compute_uv=False)[0])


def primal_error_bound(ds: LabeledDataset, lam: float, tau: float, L: float, s: int) -> float:
    """Bound on ||w_tilde - w*||_2: (sigma_1 / (lam n)) * 3 tau L sqrt(s)."""
    if not math.isfinite(L):
        raise ValueError("primal error bound requires a smooth loss")
    sigma1 = max_singular_value(ds)
    return sigma1 / (lam * ds.n) * 3.0 * tau * L * math.sqrt(s)
