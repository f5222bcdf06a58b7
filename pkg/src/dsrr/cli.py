"""Command-line driver for sweeps, verification suites, the distributed
simulation benchmark, JL diagnostics, and one-off solve/reduce runs.

Every flag can also live in a config file of flat key=value lines
(repeated keys build grids); values given on the command line win.
CSV outputs are deterministic for a fixed config and seed set.
"""

import argparse
import logging
import os
import sys
import time

import numpy as np
from scipy import sparse as sp

from .data import (
    DatasetCard,
    LabeledDataset,
    parse_svmlight,
    partition,
    partition_indices,
    serialize_svmlight,
    synth_sparse_dual,
)
from .distsim import DistConfig, disdca_run, dsrr_warmstart, timing_breakdown
from .report import write_csv
from .sketch import apply_dataset, jl_distortion, make_operator
from .solve import (
    SolverConfig,
    loss_by_name,
    predict_error,
    recover_primal,
    solve_original,
)
from .theory import support_set
from .svgplot import save_plot
from .sweep import SweepConfig, run_sweep, write_sweep_outputs
from .verify import SUITES, run_suite, write_suite_outputs

log = logging.getLogger(__name__)


# -- config file / flag resolution ----------------------------------------

def read_config(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment; repeated keys append."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {raw.rstrip()!r} is not key=value")
            k, v = line.split("=", 1)
            key = k.strip().replace("-", "_")
            if key == "lambda":
                key = "lam"
            values.setdefault(key, []).append(v.strip())
    return values


class Resolver:
    """Command line wins; config file fills the rest; defaults last."""

    def __init__(self, args):
        self.config = read_config(args.config) if getattr(args, "config", None) else {}

    def get(self, args, name: str, default=None):
        cli = getattr(args, name, None)
        if cli is not None:
            return cli
        if name in self.config:
            return ",".join(self.config[name])
        return default


def _ints(spec: str) -> tuple:
    return tuple(int(tok) for tok in str(spec).split(",") if tok != "")


def _floats(spec: str) -> tuple:
    return tuple(float(tok) for tok in str(spec).split(",") if tok != "")


def _strs(spec: str) -> tuple:
    return tuple(tok.strip() for tok in str(spec).split(",") if tok.strip())


def _synth_spec(spec: str) -> tuple:
    toks = str(spec).split(",")
    if len(toks) != 5:
        raise ValueError("synth spec is n,d,s,margin,noise")
    return (int(toks[0]), int(toks[1]), int(toks[2]), float(toks[3]), float(toks[4]))


def _load_dataset(data: str | None, synth: str | None, seed: int):
    """Returns (dataset, name). Exactly one of data/synth must be set."""
    if (data is None) == (synth is None):
        raise ValueError("specify exactly one of --data and --synth")
    if data is not None:
        with open(data, "r", encoding="utf-8") as fh:
            return parse_svmlight(fh.read()), os.path.basename(data)
    n, d, s_target, margin, noise = _synth_spec(synth)
    ds = synth_sparse_dual(n=n, d=d, s_target=s_target, margin=margin,
                           noise=noise, seed=seed)
    return ds, f"synth-{n}x{d}"


# -- subcommands -----------------------------------------------------------

def cmd_sweep(args) -> int:
    r = Resolver(args)
    data = r.get(args, "data")
    synth = r.get(args, "synth", None if data else "400,512,24,1.0,0.5")
    cfg = SweepConfig(
        data=data,
        synth=_synth_spec(synth) if synth else None,
        op_kinds=_strs(r.get(args, "op", "gauss")),
        m_grid=_ints(r.get(args, "m", "32,64,128,256")),
        tau_grid=_floats(r.get(args, "tau", "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")),
        lam_grid=_floats(r.get(args, "lam", "0.001")),
        losses=_strs(r.get(args, "loss", "sqhinge")),
        seeds=_ints(r.get(args, "seeds", "0,1,2,3,4")),
        out_dir=r.get(args, "out", "out"),
        gap_tol=float(r.get(args, "gap_tol", 1e-6)),
        max_epochs=int(r.get(args, "max_epochs", 800)),
    )
    rows, means = run_sweep(cfg)
    paths = write_sweep_outputs(cfg, rows, means)
    n_failed = sum(1 for row in rows if row.failed)
    print(f"sweep: {len(rows)} rows ({n_failed} failed cells) -> {cfg.out_dir}")
    for p in paths:
        print(f"  {p}")
    return 0


def cmd_verify(args) -> int:
    r = Resolver(args)
    suite = r.get(args, "suite")
    if suite is None:
        print("verify: --suite is required", file=sys.stderr)
        return 2
    tau_factor = r.get(args, "tau_factor")
    out_dir = r.get(args, "out", "out")
    result = run_suite(suite, tau_factor=float(tau_factor) if tau_factor else None)
    paths = write_suite_outputs(result, out_dir)
    status = "PASS" if result.passed else "FAIL"
    print(f"{result.name}: {status} ({len(result.rows)} rows)")
    for p in paths:
        print(f"  {p}")
    if not result.passed:
        for row in result.failures():
            print(f"  violated: {row}")
    return 0 if result.passed else 1


def _reduced_test_error(rds_model_u, op, test: LabeledDataset) -> float:
    margins = test.y * (rds_model_u @ op.apply_columns(test.X))
    return float(np.mean(margins <= 0.0))


def _split_train_test(full: LabeledDataset, seed: int):
    idx = partition_indices(full.n, 3, seed=1000 + seed)
    train = full.subset(np.sort(np.concatenate([idx[0], idx[1]])))
    test = full.subset(idx[2])
    return train, test


def cmd_distsim(args) -> int:
    r = Resolver(args)
    data = r.get(args, "data")
    synth = r.get(args, "synth", None if data else "3000,200,60,1.0,0.4")
    op_kind = r.get(args, "op", "gauss")
    m = int(r.get(args, "m", 32))
    lam = float(r.get(args, "lam", 0.001))
    loss = loss_by_name(r.get(args, "loss", "hinge"))
    k_nodes = int(r.get(args, "k_nodes", 4))
    rounds = int(r.get(args, "rounds", 60))
    tau = float(r.get(args, "tau", 0.9))
    warm_ks = _ints(r.get(args, "disdca_rounds", "1,2"))
    seeds = _ints(r.get(args, "seeds", "0,1,2,3,4"))
    local_updates = r.get(args, "local_updates")
    out_dir = r.get(args, "out", "out")
    os.makedirs(out_dir, exist_ok=True)

    comparison = []
    card = None
    paths = []
    for seed in seeds:
        full, name = _load_dataset(data, synth, seed)
        train, test = _split_train_test(full, seed)
        parts = partition(train, k_nodes, seed)
        cat = LabeledDataset(
            sp.hstack([p.X for p in parts], format="csc"),
            np.concatenate([p.y for p in parts]),
        )
        if card is None:
            card = DatasetCard(name=name, n_train=train.n, n_test=test.n,
                               d=train.d, n_nodes=k_nodes)
        base = dict(k_nodes=k_nodes, lam=lam, loss=loss, seed=seed,
                    local_updates_per_round=int(local_updates) if local_updates else None)

        t0 = time.perf_counter()
        op = make_operator(op_kind, train.d, m, 77 + seed)
        rds = apply_dataset(op, cat)
        t_reduce = time.perf_counter() - t0

        t0 = time.perf_counter()
        alpha_w, w_rec = dsrr_warmstart(
            cat, op,
            SolverConfig(lam=lam, tau=tau, loss=loss, max_epochs=3000,
                         gap_tol=1e-8, seed=33))
        t_warm = time.perf_counter() - t0

        inv = 1.0 / (lam * cat.n)
        u = -(rds.Xhat @ alpha_w) * inv
        err_dsrr = _reduced_test_error(u, op, test)
        err_rec = predict_error(w_rec, test)
        comparison.append({"seed": seed, "method": "DSRR", "test_error": err_dsrr,
                           "rounds": 0, "comm_vectors": 0})
        comparison.append({"seed": seed, "method": "DSRR-Rec", "test_error": err_rec,
                           "rounds": 0, "comm_vectors": 0})

        warm_traces = {}
        for k in warm_ks:
            cfg = DistConfig(max_rounds=k, warm_start=(alpha_w, w_rec), **base)
            t0 = time.perf_counter()
            trace = disdca_run(parts, test, cfg)
            warm_traces[k] = (trace, time.perf_counter() - t0)
            p = os.path.join(out_dir, f"distsim_trace_dsrr-disdca-{k}_seed{seed}.csv")
            write_csv(p, trace.trace_header().split(","),
                      [vars(row) for row in trace.rows])
            paths.append(p)
            comparison.append({
                "seed": seed, "method": f"DSRR-DisDCA-{k}",
                "test_error": trace.rows[-1].test_error,
                "rounds": trace.rounds_run,
                "comm_vectors": trace.total_comm_vectors,
            })

        cfg = DistConfig(max_rounds=rounds, **base)
        t0 = time.perf_counter()
        cold = disdca_run(parts, test, cfg)
        t_cold = time.perf_counter() - t0
        p = os.path.join(out_dir, f"distsim_trace_disdca_seed{seed}.csv")
        write_csv(p, cold.trace_header().split(","), [vars(row) for row in cold.rows])
        paths.append(p)
        comparison.append({
            "seed": seed, "method": "DisDCA",
            "test_error": cold.rows[-1].test_error,
            "rounds": cold.rounds_run,
            "comm_vectors": cold.total_comm_vectors,
        })

        if seed == seeds[0] and warm_ks:
            first = warm_traces[warm_ks[0]][0]
            print(f"wall-clock timing, seed {seed} (not written to CSV):")
            for t in timing_breakdown(first, t_reduce, t_warm,
                                      warm_traces[warm_ks[0]][1], t_cold):
                print(f"  {t.method}: reduce={t.reduce_s:.3f}s "
                      f"solve={t.reduced_solve_s:.3f}s "
                      f"distributed={t.original_solve_s:.3f}s total={t.total_s:.3f}s")

    methods = []
    for row in comparison:
        if row["method"] not in methods:
            methods.append(row["method"])

    header_line = (f"# name={card.name} n_train={card.n_train} "
                   f"n_test={card.n_test} d={card.d} nodes={card.n_nodes}")
    comp_path = os.path.join(out_dir, "distsim_comparison.csv")
    from .report import csv_text
    with open(comp_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line + "\n")
        fh.write(csv_text(["seed", "method", "test_error", "rounds", "comm_vectors"],
                          comparison))
    paths.append(comp_path)

    summary = []
    for method in methods:
        errs = [row["test_error"] for row in comparison if row["method"] == method]
        comms = [row["comm_vectors"] for row in comparison if row["method"] == method]
        summary.append({
            "method": method,
            "mean_test_error": float(np.mean(errs)),
            "min_test_error": float(np.min(errs)),
            "max_test_error": float(np.max(errs)),
            "mean_comm_vectors": float(np.mean(comms)),
            "min_comm_vectors": int(np.min(comms)),
            "max_comm_vectors": int(np.max(comms)),
        })
    sum_path = os.path.join(out_dir, "distsim_summary.csv")
    write_csv(sum_path, ["method", "mean_test_error", "min_test_error",
                         "max_test_error", "mean_comm_vectors",
                         "min_comm_vectors", "max_comm_vectors"], summary)
    paths.append(sum_path)

    for metric, fname in (("test_error", "distsim_test_error.svg"),
                          ("comm_vectors", "distsim_comm.svg")):
        series = []
        for method in methods:
            pts = [(row["seed"], row[metric]) for row in comparison
                   if row["method"] == method]
            series.append((method, [s for s, _ in pts], [v for _, v in pts]))
        p = os.path.join(out_dir, fname)
        save_plot(p, series, title=f"{metric} by method", xlabel="seed", ylabel=metric)
        paths.append(p)

    print(header_line)
    for row in summary:
        print(f"{row['method']}: test_error mean={row['mean_test_error']:.4f} "
              f"[{row['min_test_error']:.4f}, {row['max_test_error']:.4f}] "
              f"comm mean={row['mean_comm_vectors']:.1f}")
    for p in paths:
        print(f"  {p}")
    return 0


def cmd_jl(args) -> int:
    r = Resolver(args)
    kinds = _strs(r.get(args, "op", "gauss,rademacher,discrete,hash,hadamard,sample"))
    d = int(r.get(args, "d", 512))
    ms = _ints(r.get(args, "m", "32,64,128,256"))
    n_probes = int(r.get(args, "probes", 64))
    seeds = _ints(r.get(args, "seeds", "0,1,2"))
    out_dir = r.get(args, "out", "out")
    os.makedirs(out_dir, exist_ok=True)

    rows = []
    from . import rng
    for seed in seeds:
        gen = rng.generator("jl/probes", seed)
        probes = gen.standard_normal((n_probes, d))
        probes /= np.linalg.norm(probes, axis=1, keepdims=True)
        for kind in kinds:
            for m in ms:
                diag = jl_distortion(make_operator(kind, d, m, seed), probes)
                rows.append({
                    "op": kind, "d": d, "m": m, "seed": seed, "n_probes": n_probes,
                    "q50": diag.quantiles[0.5], "q90": diag.quantiles[0.9],
                    "q99": diag.quantiles[0.99],
                    "max": float(diag.distortions.max()),
                    "R": diag.R, "max_inf_ratio": diag.max_inf_ratio,
                })
    rows.sort(key=lambda row: (row["op"], row["m"], row["seed"]))
    p = os.path.join(out_dir, "jl.csv")
    write_csv(p, ["op", "d", "m", "seed", "n_probes", "q50", "q90", "q99",
                  "max", "R", "max_inf_ratio"], rows)
    print(f"jl: {len(rows)} rows -> {p}")

    series = []
    for kind in kinds:
        pts = {}
        for row in rows:
            if row["op"] == kind:
                pts.setdefault(row["m"], []).append(row["q50"])
        xs = sorted(pts)
        series.append((kind, xs, [float(np.median(pts[m])) for m in xs]))
    sp_path = os.path.join(out_dir, "jl_median_distortion.svg")
    save_plot(sp_path, series, title="median JL distortion vs m",
              xlabel="m", ylabel="q50 distortion", logx=True, logy=True)
    print(f"  {sp_path}")
    return 0


def cmd_solve(args) -> int:
    r = Resolver(args)
    seed = int(r.get(args, "seed", 0))
    ds, name = _load_dataset(r.get(args, "data"), r.get(args, "synth"), seed)
    lam = float(r.get(args, "lam", 0.01))
    loss = loss_by_name(r.get(args, "loss", "hinge"))
    cfg = SolverConfig(lam=lam, loss=loss,
                       max_epochs=int(r.get(args, "max_epochs", 2000)),
                       gap_tol=float(r.get(args, "gap_tol", 1e-8)), seed=seed)
    res = solve_original(ds, cfg)
    w = recover_primal(ds, res.alpha, lam)
    s = support_set(res.alpha).size
    print(f"{name}: n={ds.n} d={ds.d} loss={loss.kind} lam={lam}")
    print(f"primal={res.objective!r} dual={res.dual_objective!r} gap={res.gap!r}")
    print(f"epochs={res.epochs_run} converged={res.converged} support={s}")
    print(f"train_error={predict_error(w, ds)!r}")
    out_dir = r.get(args, "out")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        ap = os.path.join(out_dir, "alpha.csv")
        write_csv(ap, ["i", "alpha"],
                  [{"i": i, "alpha": float(v)} for i, v in enumerate(res.alpha)])
        wp = os.path.join(out_dir, "w.csv")
        write_csv(wp, ["j", "w"], [{"j": j, "w": float(v)} for j, v in enumerate(w)])
        print(f"  {ap}\n  {wp}")
    return 0 if res.converged else 1


def cmd_reduce(args) -> int:
    r = Resolver(args)
    seed = int(r.get(args, "seed", 0))
    ds, name = _load_dataset(r.get(args, "data"), r.get(args, "synth"), seed)
    op_kind = r.get(args, "op", "gauss")
    m = int(r.get(args, "m", 128))
    op = make_operator(op_kind, ds.d, m, seed)
    rds = apply_dataset(op, ds)
    out_dir = r.get(args, "out", "out")
    os.makedirs(out_dir, exist_ok=True)
    reduced = LabeledDataset(sp.csc_matrix(rds.Xhat), rds.y)
    p = os.path.join(out_dir, f"reduced_{op_kind}_m{m}.svml")
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_svmlight(reduced))
    print(f"{name}: {ds.d} -> {m} via {op_kind}, {ds.n} examples")
    print(f"  {p}")
    return 0


# -- parser ----------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--data", help="svmlight-format dataset path")
    p.add_argument("--synth", help="synthetic spec n,d,s,margin,noise")
    p.add_argument("--config", help="key=value config file; command line wins")
    p.add_argument("--out", help="output directory")
    p.add_argument("--gap-tol", dest="gap_tol", help="solver duality-gap target")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dsrr",
        description="dual-sparse regularized randomized reduction toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="grid experiment over (op, m, tau, lambda)")
    _add_common(p)
    p.add_argument("--op", help="comma list of operator kinds")
    p.add_argument("--m", help="comma list of reduced dimensions")
    p.add_argument("--tau", help="comma list of regularization weights")
    p.add_argument("--lambda", dest="lam", help="comma list of lambda values")
    p.add_argument("--loss", help="comma list from {hinge,sqhinge}")
    p.add_argument("--seeds", help="comma list of trial seeds")
    p.add_argument("--max-epochs", dest="max_epochs")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("verify", help="run a guarantee-verification suite")
    _add_common(p)
    p.add_argument("--suite", choices=sorted(SUITES), help="suite name")
    p.add_argument("--tau-factor", dest="tau_factor",
                   help="multiple of the tau floor to solve at (default 1.05)")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("distsim", help="simulated multi-node training benchmark")
    _add_common(p)
    p.add_argument("--op", help="operator kind")
    p.add_argument("--m", help="reduced dimension")
    p.add_argument("--tau", help="dual l1 weight for the warm-start solve")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--loss", help="hinge or sqhinge")
    p.add_argument("--seeds", help="comma list of trial seeds")
    p.add_argument("--k-nodes", dest="k_nodes", help="simulated node count")
    p.add_argument("--rounds", help="max communication rounds for the cold run")
    p.add_argument("--disdca-rounds", dest="disdca_rounds",
                   help="comma list of warm-start round budgets")
    p.add_argument("--local-updates", dest="local_updates",
                   help="coordinate updates per node per round")
    p.set_defaults(fn=cmd_distsim)

    p = sub.add_parser("jl", help="operator distortion diagnostics")
    _add_common(p)
    p.add_argument("--op", help="comma list of operator kinds")
    p.add_argument("--d", help="input dimension")
    p.add_argument("--m", help="comma list of reduced dimensions")
    p.add_argument("--probes", help="number of unit-norm probe vectors")
    p.add_argument("--seeds", help="comma list of seeds")
    p.set_defaults(fn=cmd_jl)

    p = sub.add_parser("solve", help="solve the original problem exactly")
    _add_common(p)
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--loss", help="hinge or sqhinge")
    p.add_argument("--seed")
    p.add_argument("--max-epochs", dest="max_epochs")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("reduce", help="reduce a dataset and write it out")
    _add_common(p)
    p.add_argument("--op", help="operator kind")
    p.add_argument("--m", help="reduced dimension")
    p.add_argument("--seed")
    p.set_defaults(fn=cmd_reduce)

    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
