"""End-to-end acceptance drills for the whole pipeline.

Each test prints one verdict line (run pytest with -s to see them) and
fails if its criterion is not met at the stated tolerance.
"""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from dsrr.cli import main as cli_main
from dsrr.data import (
    LabeledDataset,
    partition,
    partition_indices,
    synth_sparse_dual,
)
from dsrr.distsim import DistConfig, disdca_run, dsrr_warmstart
from dsrr.sketch import IdentityEmbedding, apply_dataset, make_operator
from dsrr.solve import (
    HINGE,
    SolverConfig,
    loss_by_name,
    predict_error,
    recover_primal,
    solve_original,
    solve_reduced_sparse,
)
from dsrr.sweep import SweepConfig, run_sweep
from dsrr.theory import restricted_spectrum_bruteforce
from dsrr.verify import run_suite

from oracles import prox_solve, rho_bruteforce_dense, sigma_bruteforce_dense


def verdict(k: int, ok: bool, detail: str):
    print(f"\nACCEPTANCE {k:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {k}: {detail}"


@pytest.fixture(scope="module")
def suites():
    cache: dict = {}

    def get(name):
        if name not in cache:
            cache[name] = run_suite(name)
        return cache[name]

    return get


def test_criterion_01_solver_and_prox_oracle_agreement():
    # 50 small instances, both losses: the exact solve certifies gap 1e-8
    # and the sparse reduced solve matches an independent proximal-gradient
    # oracle coordinatewise to 1e-6
    worst_gap, worst_diff, n_conv = 0.0, 0.0, 0
    for k in range(50):
        g = np.random.default_rng(4000 + k)
        loss = "hinge" if k % 2 == 0 else "sqhinge"
        if loss == "hinge":
            n = int(g.integers(4, 21))
            d = int(g.integers(n, 21))
        else:
            n = int(g.integers(8, 41))
            d = int(g.integers(6, 21))
        X = g.normal(size=(d, n))
        X /= np.linalg.norm(X, axis=0)
        y = np.where(g.random(n) < 0.5, -1.0, 1.0)
        ds = LabeledDataset(sp.csc_matrix(X), y)
        lam = (0.05, 0.1, 0.5)[k % 3]
        tau = (0.1, 0.25, 0.4)[k % 3]

        res0 = solve_original(
            ds, SolverConfig(lam=lam, loss=loss_by_name(loss),
                             max_epochs=30000, gap_tol=1e-8, seed=k))
        n_conv += int(res0.converged)
        worst_gap = max(worst_gap, res0.gap)

        rds = apply_dataset(IdentityEmbedding().fit_dim(d), ds)
        res1 = solve_reduced_sparse(
            rds, SolverConfig(lam=lam, tau=tau, loss=loss_by_name(loss),
                              max_epochs=60000, gap_tol=1e-14, seed=k))
        ref = prox_solve(X, y, loss, lam, tau)
        worst_diff = max(worst_diff, float(np.max(np.abs(res1.alpha - ref))))

    ok = n_conv == 50 and worst_gap <= 1e-8 and worst_diff <= 1e-6
    verdict(1, ok, f"{n_conv}/50 converged, worst gap {worst_gap:.2e} (tol 1e-08), "
                   f"worst dual coordinate deviation from oracle {worst_diff:.2e} (tol 1e-06)")


def test_criterion_02_smooth_bounds_hold(suites):
    res = suites("thm1")
    ratios = [r["err2"] / r["bound2"] for r in res.rows]
    ok = res.passed and len(res.rows) >= 20
    verdict(2, ok, f"{len(res.rows)} squared-hinge instances at tau=1.05*floor, "
                   f"{len(res.failures())} violations, max err2/bound2 {max(ratios):.3f}")


def test_criterion_03_nonsmooth_cone_and_conditional_bounds(suites):
    cone = suites("thm2")
    cond = suites("thm2-cond")
    margins = [r["margin"] for r in cond.rows]
    ok = cone.passed and cond.passed
    verdict(3, ok, f"hinge cone holds on {len(cone.rows)}/{len(cone.rows)} instances; "
                   f"separation margin in [{min(margins):.4f}, {max(margins):.4f}] on "
                   f"{len(cond.rows)} brute-forced instances, norm bounds hold on all")


def test_criterion_04_nearly_sparse_targets(suites):
    res = suites("thm4")
    xis = [r["xi"] for r in res.rows]
    ok = res.passed and len(res.rows) >= 10
    verdict(4, ok, f"{len(res.rows)} truncated-target instances, xi in "
                   f"[{min(xis):.2e}, {max(xis):.2e}], {len(res.failures())} violations")


def test_criterion_05_recovered_primal_distance(suites):
    res = suites("thm5")
    ratios = [r["err_w"] / r["bound_w"] for r in res.rows]
    ok = res.passed
    verdict(5, ok, f"recovered primal within the spectral bound on "
                   f"{len(res.rows)} instances, max err_w/bound_w {max(ratios):.3f}")


def test_criterion_06_reduction_error_scaling(suites):
    res = suites("thm6-scaling")
    slopes = {r["op"]: r["slope"] for r in res.rows if r["check"] == "scaling"}
    spiky = {r["op"]: r["value"] for r in res.rows if r["check"] == "spiky"}
    ok = res.passed
    verdict(6, ok, "log-log slope of median reduction error vs m: "
                   + ", ".join(f"{k}={v:.2f}" for k, v in sorted(slopes.items()))
                   + f" (required [-0.8, -0.2]); spiky data: sampling {spiky['sample']:.3f}"
                     f" > dense {spiky['gauss']:.3f}")


def test_criterion_07_restricted_spectrum_oracle(suites):
    ds = synth_sparse_dual(n=10, d=8, s_target=4, margin=1.0, noise=0.3, seed=0)
    X = ds.X.toarray()
    worst_rel = 0.0
    for m in (4, 8, 16):
        for seed in (0, 1):
            op = make_operator("gauss", 8, m, seed)
            rep = restricted_spectrum_bruteforce(ds, op, 2)
            sig = sigma_bruteforce_dense(X, op.apply_columns(ds.X), 2)
            worst_rel = max(worst_rel, abs(rep.sigma_s - sig) / sig)
    rho_p, rho_m = rho_bruteforce_dense(X, 2)
    rep0 = restricted_spectrum_bruteforce(ds, None, 2)
    worst_rel = max(worst_rel, abs(rep0.rho_plus - rho_p) / rho_p,
                    abs(rep0.rho_minus - rho_m) / rho_m)

    res = suites("thm7-scaling")
    medians = [r["median_sigma"] for r in res.rows]
    ok = worst_rel <= 1e-12 and res.passed
    verdict(7, ok, f"dense enumeration oracle matched to {worst_rel:.1e} relative "
                   f"(tol 1e-12); median sigma_2 over 20 seeds falls "
                   + " -> ".join(f"{v:.3f}" for v in medians) + " as m doubles")


def test_criterion_08_sweep_shape():
    cfg = SweepConfig(synth=(400, 512, 24, 1.0, 0.5))
    rows, means = run_sweep(cfg)
    n_failed = sum(1 for r in rows if r.failed)

    mono_ok = True
    for m in cfg.m_grid:
        cone = [e["cone_ratio"] for e in means if e["m"] == m]
        mono_ok &= all(b <= a + 1e-12 for a, b in zip(cone, cone[1:]))
    m0 = min(cfg.m_grid)
    errs = [e["rel_dual_err"] for e in means if e["m"] == m0]
    idx = int(np.argmin(errs))
    interior_ok = 0 < idx < len(errs) - 1

    ok = n_failed == 0 and mono_ok and interior_ok
    verdict(8, ok, f"{len(rows)} cells, {n_failed} failures; mean cone_ratio "
                   f"non-increasing in tau for every m in {cfg.m_grid}; "
                   f"rel_dual_err at m={m0} minimized at interior tau="
                   f"{cfg.tau_grid[idx]}")


def test_criterion_09_warm_start_benchmark():
    lam = 1e-3
    cold_r2t, warm_r2t, err_gaps = [], [], []
    for seed in range(5):
        full = synth_sparse_dual(n=3000, d=200, s_target=60, margin=1.0,
                                 noise=0.4, seed=seed)
        idx = partition_indices(3000, 3, seed=1000 + seed)
        train = full.subset(np.sort(np.concatenate([idx[0], idx[1]])))
        test = full.subset(idx[2])
        parts = partition(train, 4, seed=seed)
        cat = LabeledDataset(
            X=sp.hstack([p.X for p in parts], format="csc"),
            y=np.concatenate([p.y for p in parts]))

        cold = disdca_run(parts, test, DistConfig(
            k_nodes=4, max_rounds=60, lam=lam, loss=HINGE, seed=seed))

        res = solve_original(cat, SolverConfig(
            lam=lam, loss=HINGE, max_epochs=8000, gap_tol=1e-9))
        w_star = recover_primal(cat, res.alpha, lam)
        e_star = predict_error(w_star, test)

        op = make_operator("gauss", 200, 32, 77 + seed)
        from dsrr.theory import delta_vector, tau_min
        tau = min(1.1 * tau_min(delta_vector(cat, op, w_star)), 0.9)
        a_w, w_w = dsrr_warmstart(cat, op, SolverConfig(
            lam=lam, loss=HINGE, tau=tau, max_epochs=3000, gap_tol=1e-8, seed=33))
        warm = disdca_run(parts, test, DistConfig(
            k_nodes=4, max_rounds=60, lam=lam, loss=HINGE, seed=seed,
            warm_start=(a_w, w_w)))

        target = e_star + 0.001
        def rounds_to_target(trace):
            for row in trace.rows:
                if row.test_error <= target:
                    return row.round
            return 10**6
        cold_r2t.append(rounds_to_target(cold))
        warm_r2t.append(rounds_to_target(warm))
        err_gaps.append(abs(warm.rows[-1].test_error - cold.rows[-1].test_error))

    med_cold = float(np.median(cold_r2t))
    med_warm = float(np.median(warm_r2t))
    ok = med_warm <= 0.5 * med_cold and max(err_gaps) <= 0.002
    verdict(9, ok, f"median rounds to within 0.1% of the exact test error: "
                   f"warm {med_warm:.0f} vs cold {med_cold:.0f} over 5 seeds; "
                   f"max |final error difference| {max(err_gaps):.4f} (tol 0.002)")


def test_criterion_10_byte_identical_reruns(tmp_path):
    commands = [
        ["sweep", "--synth", "30,12,4,1.0,0.3", "--op", "gauss", "--m", "4",
         "--tau", "0.0,0.2", "--lambda", "0.1", "--seeds", "0,1"],
        ["verify", "--suite", "thm7-scaling"],
        ["distsim", "--synth", "120,16,6,1.0,0.4", "--k-nodes", "2", "--m", "8",
         "--rounds", "8", "--disdca-rounds", "1", "--seeds", "0", "--tau", "0.5",
         "--lambda", "0.01"],
    ]
    compared = 0
    identical = True
    for i, argv in enumerate(commands):
        d1, d2 = tmp_path / f"run{i}a", tmp_path / f"run{i}b"
        assert cli_main(argv + ["--out", str(d1)]) == 0
        assert cli_main(argv + ["--out", str(d2)]) == 0
        names = sorted(p.name for p in d1.glob("*.csv"))
        assert names, argv[0]
        for name in names:
            compared += 1
            identical &= (d1 / name).read_bytes() == (d2 / name).read_bytes()
    verdict(10, identical, f"{compared} CSV files from sweep, verify and distsim "
                           f"reruns compared byte for byte, all identical")
