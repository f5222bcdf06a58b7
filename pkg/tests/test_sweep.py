import math

import numpy as np
import pytest

from dsrr.data import serialize_svmlight, synth_sparse_dual
from dsrr.sweep import (
    MEAN_HEADER,
    SWEEP_HEADER,
    SweepConfig,
    SweepRow,
    load_train_test,
    mean_rows,
    run_sweep,
    thread_budget,
    write_sweep_outputs,
)

SMALL = dict(
    synth=(30, 16, 6, 1.0, 0.4),
    op_kinds=("gauss", "hash"),
    m_grid=(4, 8),
    tau_grid=(0.0, 0.2),
    lam_grid=(0.1,),
    losses=("sqhinge",),
    seeds=(0, 1),
    max_epochs=600,
)


def test_config_requires_exactly_one_source():
    with pytest.raises(ValueError, match="exactly one"):
        SweepConfig()
    with pytest.raises(ValueError, match="exactly one"):
        SweepConfig(data="x.svm", synth=(10, 4, 2, 1.0, 0.1))


def test_config_rejects_empty_grids_and_bad_tau():
    with pytest.raises(ValueError, match="m_grid"):
        SweepConfig(synth=(10, 4, 2, 1.0, 0.1), m_grid=())
    with pytest.raises(ValueError, match="seeds"):
        SweepConfig(synth=(10, 4, 2, 1.0, 0.1), seeds=())
    with pytest.raises(ValueError, match="tau"):
        SweepConfig(synth=(10, 4, 2, 1.0, 0.1), tau_grid=(0.0, 1.0))
    with pytest.raises(ValueError, match="tau"):
        SweepConfig(synth=(10, 4, 2, 1.0, 0.1), tau_grid=(-0.1,))


def test_thread_budget_parsing(monkeypatch):
    monkeypatch.delenv("DSRR_THREADS", raising=False)
    assert thread_budget() == 1
    monkeypatch.setenv("DSRR_THREADS", "5")
    assert thread_budget() == 5
    monkeypatch.setenv("DSRR_THREADS", "0")
    assert thread_budget() == 1
    monkeypatch.setenv("DSRR_THREADS", "junk")
    assert thread_budget() == 1


def test_load_synth_holds_out_test_tail():
    cfg = SweepConfig(**SMALL)
    train, test = load_train_test(cfg, seed=0)
    assert train.n == 30 and test.n == 30
    assert train.d == test.d == 16
    t2, _ = load_train_test(cfg, seed=0)
    assert np.array_equal(train.X.toarray(), t2.X.toarray())


def test_load_file_backed_reports_train_error(tmp_path):
    ds = synth_sparse_dual(12, 6, 3, 1.0, 0.3, seed=0)
    p = tmp_path / "data.svm"
    p.write_text(serialize_svmlight(ds), encoding="utf-8")
    cfg = SweepConfig(data=str(p), m_grid=(4,), tau_grid=(0.1,))
    train, test = load_train_test(cfg, seed=7)
    assert train is test
    assert train.n == 12 and train.d == 6


def test_row_count_and_sort_order():
    rows, means = run_sweep(SweepConfig(**SMALL))
    assert len(rows) == 2 * 2 * 2 * 1 * 1 * 2
    assert [r.key() for r in rows] == sorted(r.key() for r in rows)
    assert len(means) == 8
    assert all(e["n_seeds"] == 2 for e in means)
    assert all(not r.failed for r in rows)
    assert all(math.isfinite(r.cone_ratio) or r.tau == 0.0 for r in rows)


def test_identity_tau_zero_recovers_exactly():
    # identity reduction with no l1 term is the original problem verbatim
    cfg = SweepConfig(
        synth=(30, 16, 6, 1.0, 0.4),
        op_kinds=("identity",),
        m_grid=(16,),
        tau_grid=(0.0,),
        lam_grid=(0.1,),
        losses=("sqhinge",),
        seeds=(0,),
        gap_tol=1e-9,
        max_epochs=2000,
    )
    rows, _ = run_sweep(cfg)
    assert len(rows) == 1
    assert rows[0].rel_dual_err <= 1e-12  # solver entry points differ by ulps only
    assert rows[0].rel_primal_err <= 1e-12
    assert rows[0].delta_inf == 0.0
    assert rows[0].cone_ratio <= 1e-10


def test_unconverged_original_yields_failure_rows():
    cfg = SweepConfig(**{**SMALL, "max_epochs": 1, "seeds": (0,)})
    rows, means = run_sweep(cfg)
    assert len(rows) == 8
    assert all(r.failed for r in rows)
    assert all(r.rel_dual_err == math.inf for r in rows)
    assert all(e["failed"] == 1 for e in means)
    assert all(e["rel_dual_err"] == math.inf for e in means)


def test_mean_rows_aggregation():
    def row(seed, cone, failed=False):
        return SweepRow(
            op="gauss", m=4, tau=0.1, lam=0.1, loss="sqhinge", seed=seed,
            cone_ratio=cone, rel_dual_err=0.5, rel_primal_err=0.25,
            delta_inf=0.1, s=3.0, test_error=0.0, failed=failed,
        )

    means = mean_rows([row(0, 0.2), row(1, 0.4)])
    assert len(means) == 1
    e = means[0]
    assert e["n_seeds"] == 2 and e["failed"] == 0
    assert e["cone_ratio"] == pytest.approx(0.3)
    assert e["rel_dual_err"] == pytest.approx(0.5)

    means_inf = mean_rows([row(0, 0.2), row(1, math.inf, failed=True)])
    assert means_inf[0]["cone_ratio"] == math.inf
    assert means_inf[0]["failed"] == 1


def test_parallel_matches_serial(monkeypatch):
    cfg = SweepConfig(**{**SMALL, "op_kinds": ("gauss",), "m_grid": (4,)})
    monkeypatch.setenv("DSRR_THREADS", "1")
    serial_rows, serial_means = run_sweep(cfg)
    monkeypatch.setenv("DSRR_THREADS", "2")
    par_rows, par_means = run_sweep(cfg)
    assert serial_rows == par_rows
    assert serial_means == par_means


def test_outputs_byte_identical_across_reruns(tmp_path):
    cfg1 = SweepConfig(**{**SMALL, "out_dir": str(tmp_path / "a")})
    cfg2 = SweepConfig(**{**SMALL, "out_dir": str(tmp_path / "b")})
    for cfg in (cfg1, cfg2):
        rows, means = run_sweep(cfg)
        paths = write_sweep_outputs(cfg, rows, means)
        assert all(__import__("os").path.exists(p) for p in paths)
    for name in ("sweep.csv", "sweep_mean.csv", "sweep_cone_ratio_sqhinge_lam0.1_gauss.svg"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b


def test_csv_headers_match_contract(tmp_path):
    cfg = SweepConfig(**{**SMALL, "op_kinds": ("gauss",), "m_grid": (4,),
                         "tau_grid": (0.1,), "seeds": (0,), "out_dir": str(tmp_path)})
    rows, means = run_sweep(cfg)
    write_sweep_outputs(cfg, rows, means)
    first = (tmp_path / "sweep.csv").read_text(encoding="utf-8").splitlines()[0]
    assert first == ",".join(SWEEP_HEADER)
    first_mean = (tmp_path / "sweep_mean.csv").read_text(encoding="utf-8").splitlines()[0]
    assert first_mean == ",".join(MEAN_HEADER)
