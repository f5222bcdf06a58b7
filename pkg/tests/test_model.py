import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone

from dsrr.data import synth_sparse_dual
from dsrr.model import DualLinearClassifier, ReducedDualClassifier
from dsrr.sketch import apply_dataset, make_operator
from dsrr.solve import HINGE, SolverConfig, recover_primal, solve_original, solve_reduced_sparse


def rows_and_labels(seed=0, n=60, d=20, labels=(-1, 1)):
    ds = synth_sparse_dual(n, d, max(3, d // 4), 1.0, 0.4, seed=seed)
    X = ds.X.toarray().T
    y = np.where(ds.y > 0, labels[1], labels[0])
    return ds, X, y


def test_dual_classifier_matches_functional_path():
    ds, X, y = rows_and_labels(seed=1)
    clf = DualLinearClassifier(lam=0.05, loss="hinge", max_epochs=2000, gap_tol=1e-9, seed=3).fit(X, y)
    res = solve_original(ds, SolverConfig(lam=0.05, loss=HINGE, max_epochs=2000, gap_tol=1e-9, seed=3))
    assert np.array_equal(clf.alpha_, res.alpha)
    assert np.array_equal(clf.coef_, recover_primal(ds, res.alpha, 0.05))
    assert clf.gap_ == res.gap
    assert clf.result_.converged


def test_dual_classifier_predicts_by_margin_sign():
    _, X, y = rows_and_labels(seed=2)
    clf = DualLinearClassifier(lam=0.05, max_epochs=2000, gap_tol=1e-9).fit(X, y)
    margins = clf.decision_function(X)
    pred = clf.predict(X)
    assert np.array_equal(pred, np.where(margins > 0, 1, -1))
    assert np.mean(pred == y) > 0.8


def test_string_labels_map_to_classes_order():
    _, X, _ = rows_and_labels(seed=3)
    y = np.where(np.arange(X.shape[0]) % 2 == 0, "neg", "pos")
    clf = DualLinearClassifier(max_epochs=200).fit(X, y)
    # np.unique sorts, so classes_[1] is the +1 side
    assert clf.classes_.tolist() == ["neg", "pos"]
    assert set(clf.predict(X)) <= {"neg", "pos"}


def test_rejects_non_binary_targets():
    _, X, _ = rows_and_labels(seed=4)
    with pytest.raises(ValueError, match="binary"):
        DualLinearClassifier().fit(X, np.arange(X.shape[0]) % 3)
    with pytest.raises(ValueError, match="binary"):
        ReducedDualClassifier().fit(X, np.zeros(X.shape[0]))


def test_feature_count_checked_at_predict():
    _, X, y = rows_and_labels(seed=5)
    clf = DualLinearClassifier(max_epochs=100).fit(X, y)
    with pytest.raises(ValueError, match="features"):
        clf.predict(X[:, :-1])


def test_sparse_rows_accepted():
    ds, X, y = rows_and_labels(seed=6)
    dense = DualLinearClassifier(lam=0.05, max_epochs=500, seed=1).fit(X, y)
    sparse = DualLinearClassifier(lam=0.05, max_epochs=500, seed=1).fit(sp.csr_matrix(X), y)
    assert np.allclose(dense.coef_, sparse.coef_, atol=1e-12)


def test_reduced_classifier_matches_functional_path():
    ds, X, y = rows_and_labels(seed=7, d=24)
    clf = ReducedDualClassifier(
        op="gauss", m=12, tau=0.2, lam=0.05, loss="hinge",
        max_epochs=2000, gap_tol=1e-9, seed=4, op_seed=11,
    ).fit(X, y)
    op = make_operator("gauss", ds.d, 12, 11)
    rds = apply_dataset(op, ds)
    res = solve_reduced_sparse(rds, SolverConfig(lam=0.05, tau=0.2, loss=HINGE, max_epochs=2000, gap_tol=1e-9, seed=4))
    assert np.array_equal(clf.alpha_, res.alpha)
    assert np.array_equal(clf.coef_, recover_primal(ds, res.alpha, 0.05))
    assert clf.operator_.header() == op.header()
    assert clf.coef_.shape == (ds.d,)


def test_reduced_classifier_unfit_then_predict():
    _, X, y = rows_and_labels(seed=8)
    clf = ReducedDualClassifier()
    with pytest.raises(Exception):
        clf.predict(X)


def test_get_params_and_clone_round_trip():
    clf = ReducedDualClassifier(op="hash", m=32, tau=0.15, lam=0.02, seed=9, op_seed=2)
    params = clf.get_params()
    assert params["op"] == "hash" and params["m"] == 32 and params["tau"] == 0.15
    twin = clone(clf)
    assert twin.get_params() == params
    _, X, y = rows_and_labels(seed=9)
    a = clf.fit(X, y).coef_
    b = twin.fit(X, y).coef_
    assert np.array_equal(a, b)


def test_set_params_changes_behavior():
    _, X, y = rows_and_labels(seed=10)
    clf = DualLinearClassifier(lam=0.05, max_epochs=500)
    strong = clone(clf).set_params(lam=5.0).fit(X, y)
    weak = clf.fit(X, y)
    assert np.linalg.norm(strong.coef_) < np.linalg.norm(weak.coef_)
