"""Grid experiments: recovery quality over (operator, m, tau, lambda, loss, seed).

Each trial seed draws a fresh synthetic dataset and a fresh operator
(for file-backed data only the operator varies).  Per-cell metrics
compare the sparse reduced solution against the exactly solved original
problem.  Rows are sorted by grid key before writing so output files do
not depend on worker scheduling.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import parse_svmlight, synth_sparse_dual
from .report import write_csv
from .sketch import apply_dataset, make_operator
from .solve import (
    SolverConfig,
    loss_by_name,
    predict_error,
    recover_primal,
    solve_original,
    solve_reduced_sparse,
)
from .svgplot import save_plot
from .theory import cone_ratio, delta_vector, support_set

ORIGINAL_GAP_TOL = 1e-9

SWEEP_HEADER = [
    "op", "m", "tau", "lam", "loss", "seed",
    "cone_ratio", "rel_dual_err", "rel_primal_err",
    "delta_inf", "s", "test_error", "failed",
]
MEAN_HEADER = [
    "op", "m", "tau", "lam", "loss", "n_seeds",
    "cone_ratio", "rel_dual_err", "rel_primal_err",
    "delta_inf", "s", "test_error", "failed",
]
_METRICS = ["cone_ratio", "rel_dual_err", "rel_primal_err", "delta_inf", "s", "test_error"]

PAPER_TAU_GRID = tuple(round(0.1 * i, 1) for i in range(10))
DESK_M_GRID = (32, 64, 128, 256)


@dataclass(frozen=True)
class SweepConfig:
    """Grid specification; exactly one of data/synth names the dataset."""

    data: str | None = None
    synth: tuple | None = None  # (n, d, s_target, margin, noise)
    op_kinds: tuple = ("gauss",)
    m_grid: tuple = DESK_M_GRID
    tau_grid: tuple = PAPER_TAU_GRID
    lam_grid: tuple = (1e-3,)
    losses: tuple = ("sqhinge",)
    seeds: tuple = (0, 1, 2, 3, 4)
    out_dir: str = "."
    gap_tol: float = 1e-6
    max_epochs: int = 800

    def __post_init__(self):
        if (self.data is None) == (self.synth is None):
            raise ValueError("specify exactly one of data path or synth spec")
        for name in ("op_kinds", "m_grid", "tau_grid", "lam_grid", "losses", "seeds"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        if any(not 0.0 <= t < 1.0 for t in self.tau_grid):
            raise ValueError("tau grid values must lie in [0, 1)")


@dataclass(frozen=True)
class SweepRow:
    op: str
    m: int
    tau: float
    lam: float
    loss: str
    seed: int
    cone_ratio: float
    rel_dual_err: float
    rel_primal_err: float
    delta_inf: float
    s: float
    test_error: float
    failed: bool = False

    def key(self):
        return (self.op, self.m, self.tau, self.lam, self.loss, self.seed)

    def as_dict(self) -> dict:
        return {
            "op": self.op, "m": self.m, "tau": self.tau, "lam": self.lam,
            "loss": self.loss, "seed": self.seed, "cone_ratio": self.cone_ratio,
            "rel_dual_err": self.rel_dual_err, "rel_primal_err": self.rel_primal_err,
            "delta_inf": self.delta_inf, "s": self.s, "test_error": self.test_error,
            "failed": self.failed,
        }


def _rel_err(diff_norm: float, ref_norm: float) -> float:
    if diff_norm == 0.0:
        return 0.0
    if ref_norm == 0.0:
        return math.inf
    return diff_norm / ref_norm


def load_train_test(cfg: SweepConfig, seed: int):
    """Synthetic draws append a held-out tail of bulk points as the test
    set; file-backed data reports training error (test = train)."""
    if cfg.synth is not None:
        n, d, s_target, margin, noise = cfg.synth
        n_test = min(int(n), 1000)
        full = synth_sparse_dual(
            n=int(n) + n_test, d=int(d), s_target=int(s_target),
            margin=float(margin), noise=float(noise), seed=seed,
        )
        train = full.subset(np.arange(int(n)))
        test = full.subset(np.arange(int(n), int(n) + n_test))
        return train, test
    with open(cfg.data, "r", encoding="utf-8") as fh:
        ds = parse_svmlight(fh.read())
    return ds, ds


def _failure_row(op_kind, m, tau, lam, loss_name, seed, delta_inf=math.inf) -> SweepRow:
    return SweepRow(
        op=op_kind, m=m, tau=tau, lam=lam, loss=loss_name, seed=seed,
        cone_ratio=math.inf, rel_dual_err=math.inf, rel_primal_err=math.inf,
        delta_inf=delta_inf, s=math.inf, test_error=math.inf, failed=True,
    )


def run_context(cfg: SweepConfig, loss_name: str, lam: float, seed: int) -> list:
    """All rows for one (loss, lambda, seed): solve the original once,
    then every (operator, m, tau) cell against it."""
    train, test = load_train_test(cfg, seed)
    loss = loss_by_name(loss_name)
    res0 = solve_original(
        train,
        SolverConfig(lam=lam, loss=loss, max_epochs=cfg.max_epochs,
                     gap_tol=ORIGINAL_GAP_TOL, seed=seed),
    )
    rows = []
    if not res0.converged:
        for op_kind in cfg.op_kinds:
            for m in cfg.m_grid:
                for tau in cfg.tau_grid:
                    rows.append(_failure_row(op_kind, m, tau, lam, loss_name, seed))
        return rows

    alpha_star = res0.alpha
    w_star = recover_primal(train, alpha_star, lam)
    S = support_set(alpha_star)
    norm_a = float(np.linalg.norm(alpha_star))
    norm_w = float(np.linalg.norm(w_star))

    for op_kind in cfg.op_kinds:
        for m in cfg.m_grid:
            op = make_operator(op_kind, train.d, m, seed)
            rds = apply_dataset(op, train)
            delta_inf = float(np.abs(delta_vector(train, op, w_star)).max())
            for tau in cfg.tau_grid:
                try:
                    res = solve_reduced_sparse(
                        rds,
                        SolverConfig(lam=lam, tau=tau, loss=loss,
                                     max_epochs=cfg.max_epochs,
                                     gap_tol=cfg.gap_tol, seed=seed),
                    )
                except (ValueError, FloatingPointError):
                    rows.append(_failure_row(op_kind, m, tau, lam, loss_name, seed, delta_inf))
                    continue
                alpha_t = res.alpha
                w_t = recover_primal(train, alpha_t, lam)
                rows.append(SweepRow(
                    op=op_kind, m=m, tau=tau, lam=lam, loss=loss_name, seed=seed,
                    cone_ratio=cone_ratio(alpha_t, alpha_star, S),
                    rel_dual_err=_rel_err(float(np.linalg.norm(alpha_t - alpha_star)), norm_a),
                    rel_primal_err=_rel_err(float(np.linalg.norm(w_t - w_star)), norm_w),
                    delta_inf=delta_inf,
                    s=float(support_set(alpha_t).size),
                    test_error=predict_error(w_t, test),
                    failed=not res.converged,
                ))
    return rows


def _worker(args):
    return run_context(*args)


def thread_budget() -> int:
    raw = os.environ.get("DSRR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(cfg: SweepConfig):
    """Execute the grid; returns (per-seed rows, per-cell mean rows)."""
    contexts = [
        (cfg, loss, lam, seed)
        for loss in cfg.losses
        for lam in cfg.lam_grid
        for seed in cfg.seeds
    ]
    workers = min(thread_budget(), len(contexts))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_worker, contexts))
    else:
        chunks = [run_context(*c) for c in contexts]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=SweepRow.key)
    return rows, mean_rows(rows)


def mean_rows(rows) -> list:
    """Average metrics over seeds per cell; infinities propagate and the
    failed column counts failed seed rows."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.op, r.m, r.tau, r.lam, r.loss), []).append(r)
    out = []
    for key in sorted(groups):
        members = groups[key]
        op, m, tau, lam, loss = key
        entry = {"op": op, "m": m, "tau": tau, "lam": lam, "loss": loss,
                 "n_seeds": len(members)}
        for metric in _METRICS:
            entry[metric] = float(np.mean([getattr(r, metric) for r in members]))
        entry["failed"] = sum(int(r.failed) for r in members)
        out.append(entry)
    return out


def write_sweep_outputs(cfg: SweepConfig, rows, means) -> list:
    """Write sweep.csv, sweep_mean.csv and per-metric SVGs; returns paths."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = []

    p = os.path.join(cfg.out_dir, "sweep.csv")
    write_csv(p, SWEEP_HEADER, [r.as_dict() for r in rows])
    paths.append(p)

    p = os.path.join(cfg.out_dir, "sweep_mean.csv")
    write_csv(p, MEAN_HEADER, means)
    paths.append(p)

    for loss in cfg.losses:
        for lam in cfg.lam_grid:
            for op_kind in cfg.op_kinds:
                cell = [e for e in means
                        if e["loss"] == loss and e["lam"] == lam and e["op"] == op_kind]
                if not cell:
                    continue
                for metric in ("cone_ratio", "rel_dual_err", "rel_primal_err", "s"):
                    series = []
                    for m in cfg.m_grid:
                        pts = sorted((e["tau"], e[metric]) for e in cell if e["m"] == m)
                        series.append((f"m={m}", [t for t, _ in pts], [v for _, v in pts]))
                    p = os.path.join(
                        cfg.out_dir, f"sweep_{metric}_{loss}_lam{lam!r}_{op_kind}.svg")
                    save_plot(p, series, title=f"{metric} vs tau ({op_kind}, {loss}, lam={lam!r})",
                              xlabel="tau", ylabel=metric)
                    paths.append(p)
    return paths
