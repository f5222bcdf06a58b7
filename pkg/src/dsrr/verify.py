"""Batched verification suites for the recovery-error guarantees.

Each suite draws a family of solvable instances, runs the reduction and
the sparse reduced solve where needed, and evaluates the applicable
inequalities.  A suite passes only if every row passes.  Rows carry the
full instance key (dataset, op, m, seed, lam, tau, loss) so the CSV is
self-describing.
"""

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import sparse as sp

from .data import LabeledDataset, synth_sparse_dual
from .report import write_csv
from .sketch import apply_dataset, make_operator
from .solve import (
    HINGE,
    SQUARED_HINGE,
    SolverConfig,
    recover_primal,
    solve_original,
    solve_reduced_sparse,
)
from .svgplot import save_plot
from .theory import (
    SLACK,
    check_nonsmooth_condition,
    cone_and_bounds,
    delta_vector,
    near_sparsity_xi,
    primal_error_bound,
    restricted_spectrum_bruteforce,
    support_set,
    tau_min,
)

# Shared instance family for the bound suites; m is sized so that
# 1.05 * tau_min stays inside [0, 1) across seeds.
INSTANCE = {"n": 150, "d": 48, "s_target": 12, "margin": 1.0, "noise": 0.5}
SUITE_LAM = 0.01
SMOOTH_M = 256
NEARSPARSE_M = 384
SLOPE_RANGE = (-0.8, -0.2)

REPORT_HEADER = [
    "dataset", "op", "m", "seed", "lam", "tau", "loss",
    "delta_inf", "xi", "tau_min", "s", "cone_ratio",
    "err2", "bound2", "err1", "bound1",
    "err_S", "bound_S", "err_Sc", "bound_Sc", "ok",
]
COND_HEADER = [
    "dataset", "op", "m", "seed", "lam", "tau", "loss", "s", "level",
    "rho_minus", "sigma", "margin", "holds",
    "err2", "bound2", "err1", "bound1", "cone_ratio", "ok",
]
PRIMAL_HEADER = [
    "dataset", "op", "m", "seed", "lam", "tau", "loss", "s",
    "err_w", "bound_w", "ok",
]
SCALING_HEADER = ["check", "op", "m", "value", "slope", "ok"]
SIGMA_HEADER = ["op", "m", "median_sigma", "slope", "ok"]


@dataclass(frozen=True)
class SuiteResult:
    name: str
    header: tuple
    rows: tuple
    passed: bool

    def failures(self) -> list:
        return [r for r in self.rows if not r["ok"]]


def _dataset_name() -> str:
    return f"synth-{INSTANCE['n']}x{INSTANCE['d']}"


def _solved_instance(seed: int, loss, lam: float = SUITE_LAM, gap_tol: float = 1e-9):
    ds = synth_sparse_dual(seed=seed, **INSTANCE)
    res = solve_original(
        ds, SolverConfig(lam=lam, loss=loss, max_epochs=3000, gap_tol=gap_tol, seed=seed))
    if not res.converged:
        raise RuntimeError(f"instance seed={seed} did not reach gap {gap_tol}")
    w = recover_primal(ds, res.alpha, lam)
    return ds, res.alpha, w


def _bound_row(seed, loss, m, tau_factor, s_drop: int = 0):
    """One instance of the bound check; s_drop > 0 truncates the exact
    solution to its top-(|S|-s_drop) entries and uses the xi-augmented
    floor for tau."""
    lam = SUITE_LAM
    ds, alpha_star, w = _solved_instance(seed, loss, lam,
                                         gap_tol=1e-12 if s_drop else 1e-9)
    S_star = support_set(alpha_star)
    op = make_operator("gauss", ds.d, m, seed)
    delta = delta_vector(ds, op, w)
    dinf = float(np.abs(delta).max())

    if s_drop:
        s = max(1, S_star.size - s_drop)
        target, xi = near_sparsity_xi(ds, alpha_star, s, lam, loss)
        S = np.sort(np.argsort(-np.abs(alpha_star), kind="stable")[:s]).astype(np.int64)
    else:
        target, xi = alpha_star, 0.0
        S = S_star
    tau = tau_factor * tau_min(delta, xi)
    if not 0.0 < tau < 1.0:
        raise RuntimeError(f"tau={tau} infeasible for seed={seed}")

    rds = apply_dataset(op, ds)
    r2 = solve_reduced_sparse(
        rds, SolverConfig(lam=lam, tau=tau, loss=loss, max_epochs=3000,
                          gap_tol=1e-9, seed=seed))
    rep = cone_and_bounds(r2.alpha, target, S, tau, loss.L, delta_inf=dinf, xi=xi)
    row = {
        "dataset": _dataset_name(), "op": "gauss", "m": m, "seed": seed,
        "lam": lam, "tau": tau, "loss": loss.kind,
        "delta_inf": dinf, "xi": xi, "tau_min": rep.tau_min, "s": rep.s,
        "cone_ratio": rep.cone_ratio,
        "err2": rep.err2, "bound2": rep.bound2,
        "err1": rep.err1, "bound1": rep.bound1,
        "err_S": rep.err_S, "bound_S": rep.bound_S,
        "err_Sc": rep.err_Sc, "bound_Sc": rep.bound_Sc,
        "ok": rep.passed,
    }
    return row, (ds, alpha_star, w, r2.alpha, rep)


def suite_thm1(seeds=tuple(range(20)), tau_factor: float = 1.05) -> SuiteResult:
    """Smooth-loss recovery: cone plus all four norm bounds."""
    rows = [_bound_row(seed, SQUARED_HINGE, SMOOTH_M, tau_factor)[0] for seed in seeds]
    return SuiteResult("thm1", tuple(REPORT_HEADER), tuple(rows),
                       all(r["ok"] for r in rows))


def suite_thm2(seeds=tuple(range(20)), tau_factor: float = 1.05) -> SuiteResult:
    """Non-smooth loss: only the cone membership is unconditional."""
    rows = [_bound_row(seed, HINGE, SMOOTH_M, tau_factor)[0] for seed in seeds]
    return SuiteResult("thm2", tuple(REPORT_HEADER), tuple(rows),
                       all(r["ok"] for r in rows))


def suite_thm4(seeds=tuple(range(12)), tau_factor: float = 1.05) -> SuiteResult:
    """Nearly-sparse targets: bounds against the truncated solution."""
    rows = [_bound_row(seed, SQUARED_HINGE, NEARSPARSE_M, tau_factor, s_drop=1)[0]
            for seed in seeds]
    return SuiteResult("thm4", tuple(REPORT_HEADER), tuple(rows),
                       all(r["ok"] for r in rows))


def suite_thm5(seeds=tuple(range(20)), tau_factor: float = 1.05) -> SuiteResult:
    """Recovered-primal distance against the spectral-norm bound."""
    lam = SUITE_LAM
    rows = []
    for seed in seeds:
        row, (ds, alpha_star, w, alpha_t, rep) = _bound_row(
            seed, SQUARED_HINGE, SMOOTH_M, tau_factor)
        w_t = recover_primal(ds, alpha_t, lam)
        err_w = float(np.linalg.norm(w_t - w))
        bound_w = primal_error_bound(ds, lam, row["tau"], SQUARED_HINGE.L, rep.s)
        rows.append({
            "dataset": row["dataset"], "op": row["op"], "m": row["m"],
            "seed": seed, "lam": lam, "tau": row["tau"], "loss": row["loss"],
            "s": rep.s, "err_w": err_w, "bound_w": bound_w,
            "ok": rep.tau_ok and err_w <= bound_w * SLACK,
        })
    return SuiteResult("thm5", tuple(PRIMAL_HEADER), tuple(rows),
                       all(r["ok"] for r in rows))


def spike_dataset(n: int = 16, a0: float = 2.1, a1: float = 1.0, b: float = 1.0) -> LabeledDataset:
    """One shared heavy coordinate plus per-example unit coordinates.

    The first example carries a smaller spike amplitude, putting it
    alone on the margin: the exact dual has support {0} with an interior
    coefficient, and the example Gram matrix is a rank-one bump plus
    b^2 I, so every restricted eigenvalue is at least b^2/n.
    """
    d = n + 1
    cols = np.zeros((d, n))
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    amp = np.full(n, a0)
    amp[0] = a1
    for j in range(n):
        cols[n, j] = amp[j] * y[j]
        cols[j, j] = b
    return LabeledDataset(sp.csc_matrix(cols), y)


def suite_thm2_cond(gauss_seeds=(5, 6, 7), lam: float = 0.1) -> SuiteResult:
    """Non-smooth norm bounds on instances whose restricted spectrum is
    brute-forced and satisfies the separation condition."""
    ds = spike_dataset()
    s = 1
    level = 16 * s
    res = solve_original(
        ds, SolverConfig(lam=lam, loss=HINGE, max_epochs=3000, gap_tol=1e-12, seed=0))
    alpha_star = res.alpha
    w = recover_primal(ds, alpha_star, lam)
    S = support_set(alpha_star)

    rows = []
    ops = [("identity", ds.d, 0)] + [("gauss", 1 << 19, seed) for seed in gauss_seeds]
    for kind, m, seed in ops:
        op = make_operator(kind, ds.d, m, seed)
        spec = restricted_spectrum_bruteforce(ds, op, level)
        delta = delta_vector(ds, op, w)
        tau = max(1.05 * tau_min(delta), 0.05)
        cond = check_nonsmooth_condition(spec, s=s, lam=lam, tau=tau)
        rds = apply_dataset(op, ds)
        r2 = solve_reduced_sparse(
            rds, SolverConfig(lam=lam, tau=tau, loss=HINGE, max_epochs=3000,
                              gap_tol=1e-12, seed=0))
        err2 = float(np.linalg.norm(r2.alpha - alpha_star))
        err1 = float(np.abs(r2.alpha - alpha_star).sum())
        crep = cone_and_bounds(r2.alpha, alpha_star, S, tau, HINGE.L,
                               delta_inf=float(np.abs(delta).max()))
        ok = (cond.holds
              and err2 <= cond.bound2 * SLACK
              and err1 <= cond.bound1 * SLACK
              and crep.flags["cone"] is True)
        rows.append({
            "dataset": "spike-16x17", "op": kind, "m": m, "seed": seed,
            "lam": lam, "tau": tau, "loss": "hinge", "s": s, "level": level,
            "rho_minus": spec.rho_minus, "sigma": spec.sigma_s,
            "margin": cond.margin, "holds": cond.holds,
            "err2": err2, "bound2": cond.bound2,
            "err1": err1, "bound1": cond.bound1,
            "cone_ratio": crep.cone_ratio, "ok": ok,
        })
    return SuiteResult("thm2-cond", tuple(COND_HEADER), tuple(rows),
                       all(r["ok"] for r in rows))


def onehot_dataset(n: int = 96, d: int = 128) -> LabeledDataset:
    """Maximally spiky features: each example is a single unit coordinate."""
    cols = np.zeros((d, n))
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    for j in range(n):
        cols[j % d, j] = 1.0
    return LabeledDataset(sp.csc_matrix(cols), y)


def _fit_slope(ms, values) -> float:
    return float(np.polyfit(np.log(np.asarray(ms, float)),
                            np.log(np.asarray(values, float)), 1)[0])


def suite_thm6(seeds=tuple(range(10)), d: int = 512,
               ms=(64, 128, 256, 512)) -> SuiteResult:
    """Reduction-error scaling in m, plus the spiky-data contrast where
    coordinate sampling must trail a dense projection."""
    instances = []
    for seed in seeds:
        ds = synth_sparse_dual(n=300, d=d, s_target=24, margin=1.0, noise=0.5, seed=seed)
        res = solve_original(
            ds, SolverConfig(lam=SUITE_LAM, loss=SQUARED_HINGE, max_epochs=1500,
                             gap_tol=1e-9, seed=seed))
        instances.append((ds, recover_primal(ds, res.alpha, SUITE_LAM)))

    rows = []
    lo, hi = SLOPE_RANGE
    for kind in ("gauss", "hash", "hadamard"):
        medians = []
        for m in ms:
            vals = [float(np.abs(delta_vector(ds, make_operator(kind, d, m, seed), w)).max())
                    for seed, (ds, w) in enumerate(instances)]
            medians.append(float(np.median(vals)))
        slope = _fit_slope(ms, medians)
        ok = lo <= slope <= hi
        for m, v in zip(ms, medians):
            rows.append({"check": "scaling", "op": kind, "m": m,
                         "value": v, "slope": slope, "ok": ok})

    spiky = onehot_dataset()
    res = solve_original(
        spiky, SolverConfig(lam=0.05, loss=HINGE, max_epochs=500, gap_tol=1e-10, seed=0))
    w = recover_primal(spiky, res.alpha, 0.05)
    m0 = 32
    med = {}
    for kind in ("sample", "gauss"):
        vals = [float(np.abs(delta_vector(spiky, make_operator(kind, spiky.d, m0, seed), w)).max())
                for seed in seeds]
        med[kind] = float(np.median(vals))
    spiky_ok = med["sample"] > med["gauss"]
    for kind in ("sample", "gauss"):
        rows.append({"check": "spiky", "op": kind, "m": m0,
                     "value": med[kind], "slope": math.nan, "ok": spiky_ok})
    return SuiteResult("thm6-scaling", tuple(SCALING_HEADER), tuple(rows),
                       all(r["ok"] for r in rows))


def suite_thm7(seeds=tuple(range(20)), ms=(4, 8, 16, 32), s: int = 2) -> SuiteResult:
    """Restricted cross-spectrum norm shrinks as m grows."""
    ds = synth_sparse_dual(n=10, d=8, s_target=4, margin=1.0, noise=0.3, seed=0)
    medians = []
    for m in ms:
        vals = [restricted_spectrum_bruteforce(ds, make_operator("gauss", ds.d, m, seed), s).sigma_s
                for seed in seeds]
        medians.append(float(np.median(vals)))
    slope = _fit_slope(ms, medians)
    lo, hi = SLOPE_RANGE
    slope_ok = lo <= slope <= hi
    rows = []
    for i, (m, v) in enumerate(zip(ms, medians)):
        ok = slope_ok and (i == 0 or v < medians[i - 1])
        rows.append({"op": "gauss", "m": m, "median_sigma": v, "slope": slope, "ok": ok})
    return SuiteResult("thm7-scaling", tuple(SIGMA_HEADER), tuple(rows),
                       all(r["ok"] for r in rows))


SUITES = {
    "thm1": suite_thm1,
    "thm2": suite_thm2,
    "thm2-cond": suite_thm2_cond,
    "thm4": suite_thm4,
    "thm5": suite_thm5,
    "thm6-scaling": suite_thm6,
    "thm7-scaling": suite_thm7,
}

_TAU_FACTOR_SUITES = {"thm1", "thm2", "thm4", "thm5"}


def run_suite(name: str, tau_factor: float | None = None) -> SuiteResult:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    fn = SUITES[name]
    if tau_factor is not None and name in _TAU_FACTOR_SUITES:
        return fn(tau_factor=tau_factor)
    return fn()


def write_suite_outputs(result: SuiteResult, out_dir: str) -> list:
    """CSV always; a scaling suite also gets a log-log plot."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    p = os.path.join(out_dir, f"verify_{result.name}.csv")
    write_csv(p, list(result.header), list(result.rows))
    paths.append(p)

    if result.name == "thm6-scaling":
        series = []
        for kind in ("gauss", "hash", "hadamard"):
            pts = [(r["m"], r["value"]) for r in result.rows
                   if r["check"] == "scaling" and r["op"] == kind]
            series.append((kind, [m for m, _ in pts], [v for _, v in pts]))
        p = os.path.join(out_dir, "verify_thm6_scaling.svg")
        save_plot(p, series, title="median reduction error vs m",
                  xlabel="m", ylabel="delta_inf", logx=True, logy=True)
        paths.append(p)
    if result.name == "thm7-scaling":
        pts = [(r["m"], r["median_sigma"]) for r in result.rows]
        p = os.path.join(out_dir, "verify_thm7_scaling.svg")
        save_plot(p, [("gauss", [m for m, _ in pts], [v for _, v in pts])],
                  title="median restricted cross-spectrum vs m",
                  xlabel="m", ylabel="sigma_s", logx=True, logy=True)
        paths.append(p)
    return paths
