import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdsignals.errors import (
    ClassTooSmall,
    DidNotConverge,
    FeatureCountMismatch,
    NonFiniteInput,
    NotAForest,
    SingleClass,
    SingularCovariance,
)
from hdsignals.evaluation import roc_auc
from hdsignals.models import (
    EXTRA_TREES,
    RANDOM_FOREST,
    LogisticModel,
    ModelSpec,
    TreeParams,
    feature_importances,
    fit_forest,
    fit_lda,
    fit_logreg,
    fit_model,
    fit_qda,
    load_model,
    predict_proba,
    save_model,
)
from hdsignals.models.linear import objective

MODES = (RANDOM_FOREST, EXTRA_TREES)


def blobs(rng, n=200, sep=6.0, p=2):
    y = np.repeat([0, 1], n // 2)
    X = rng.standard_normal((n, p)) + sep * y[:, None] / np.sqrt(p)
    return X, y


# -- forests -------------------------------------------------------------------
@pytest.mark.parametrize("mode", MODES)
def test_forest_separates_blobs(rng, mode):
    X, y = blobs(rng)
    model = fit_forest(X, y, TreeParams(n_estimators=100, mode=mode, seed=1))
    assert (model.predict(X) == y).mean() >= 0.99


@pytest.mark.parametrize("mode", MODES)
def test_forest_single_class(mode):
    with pytest.raises(SingleClass):
        fit_forest(np.ones((5, 2)), np.zeros(5, dtype=int), TreeParams(mode=mode))


def test_forest_rejects_nan():
    X = np.zeros((4, 2))
    X[1, 1] = np.nan
    with pytest.raises(NonFiniteInput):
        fit_forest(X, [0, 1, 0, 1])


@pytest.mark.parametrize("bad", [{"n_estimators": 0}, {"max_features": 0.0}, {"max_features": 1.5}, {"mode": "x"}])
def test_tree_params_validation(bad):
    with pytest.raises(ValueError):
        TreeParams(**bad)


def test_pure_leaves_give_certain_probabilities(rng):
    X, y = blobs(rng, n=60)
    model = fit_forest(X, y, TreeParams(n_estimators=20, mode=EXTRA_TREES, seed=0))
    proba = predict_proba(model, X[y == 1])
    np.testing.assert_array_equal(proba, np.tile([0.0, 1.0], (int(y.sum()), 1)))


@pytest.mark.parametrize("family", ["ert", "rf"])
def test_permutation_null_auc(family):
    # shuffled labels destroy the signal; held-out AUC averages to chance
    aucs = []
    for rep in range(8):
        rng = np.random.default_rng(rep)
        X, y = blobs(rng, n=120, p=4)
        y = rng.permutation(y)
        folds = np.arange(len(y)) % 5
        rng.shuffle(folds)
        for f in range(5):
            test = folds == f
            m = fit_model(ModelSpec.default(family, n_estimators=50), X[~test], y[~test], seed=rep)
            aucs.append(roc_auc(y[test], m.predict_proba(X[test])[:, 1]))
    assert abs(np.mean(aucs) - 0.5) <= 0.05


@pytest.mark.parametrize("mode", MODES)
def test_forest_determinism(rng, mode):
    X, y = blobs(rng, n=80, sep=1.0, p=5)
    a = fit_forest(X, y, TreeParams(n_estimators=15, mode=mode, seed=3))
    b = fit_forest(X, y, TreeParams(n_estimators=15, mode=mode, seed=3), threads=3)
    for ta, tb in zip(a.trees, b.trees):
        np.testing.assert_array_equal(ta.threshold, tb.threshold)
        np.testing.assert_array_equal(ta.feature, tb.feature)
    assert a.predict_proba(X).tobytes() == b.predict_proba(X).tobytes()
    # training rows sit in pure leaves, so compare off-sample
    probe = rng.standard_normal((50, 5))
    c = fit_forest(X, y, TreeParams(n_estimators=15, mode=mode, seed=4))
    assert a.predict_proba(probe).tobytes() != c.predict_proba(probe).tobytes()


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("factor", [2.0, 0.25])
def test_forest_argmax_invariant_to_uniform_scaling(rng, mode, factor):
    # powers of two scale every feature and threshold exactly
    X, y = blobs(rng, n=80, sep=1.5, p=3)
    params = TreeParams(n_estimators=25, mode=mode, seed=2)
    probe = rng.standard_normal((50, 3))
    plain = fit_forest(X, y, params).predict(probe)
    scaled = fit_forest(X * factor, y, params).predict(probe * factor)
    np.testing.assert_array_equal(plain, scaled)


def test_rf_training_log_loss_falls_with_more_trees():
    def log_loss(y, p1):
        p1 = np.clip(p1, 1e-6, 1 - 1e-6)
        return -np.mean(y * np.log(p1) + (1 - y) * np.log(1 - p1))

    losses = np.zeros(3)
    for seed in range(5):
        rng = np.random.default_rng(seed)
        X, y = blobs(rng, n=100, sep=1.0, p=4)
        for i, n in enumerate((1, 10, 50)):
            m = fit_forest(X, y, TreeParams(n_estimators=n, mode=RANDOM_FOREST, seed=seed))
            losses[i] += log_loss(y, m.predict_proba(X)[:, 1]) / 5
    assert losses[0] >= losses[1] >= losses[2]


# -- importances ---------------------------------------------------------------
def test_single_informative_feature_dominates(rng):
    n = 300
    X = rng.standard_normal((n, 6))
    y = (X[:, 0] > 0).astype(int)
    model = fit_forest(X, y, TreeParams(n_estimators=100, mode=EXTRA_TREES, max_features="all", seed=0))
    imp, sd = feature_importances(model)
    assert imp[0] > 0.8
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert sd.shape == imp.shape and (sd >= 0).all()


@pytest.mark.parametrize("mode", MODES)
def test_noise_importances_stay_near_uniform(rng, mode):
    n_features = 10
    X = rng.standard_normal((300, n_features))
    y = rng.integers(0, 2, 300)
    imp, _ = feature_importances(fit_forest(X, y, TreeParams(n_estimators=100, mode=mode, seed=0)))
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert (imp < 2 / n_features).all()


def test_importances_need_a_forest(rng):
    X, y = blobs(rng, n=20)
    with pytest.raises(NotAForest):
        feature_importances(fit_lda(X, y))


# -- probability interface -----------------------------------------------------
def test_zero_weight_logistic_is_half():
    m = LogisticModel(feature_count=3, coef=np.zeros(3), intercept=0.0)
    np.testing.assert_array_equal(m.predict_proba(np.ones((2, 3))), [[0.5, 0.5], [0.5, 0.5]])


@pytest.mark.parametrize("family", ["ert", "rf", "logreg", "lda", "qda"])
def test_probabilities_sum_to_one_and_width_checked(rng, family):
    X, y = blobs(rng, n=60, sep=1.0, p=3)
    m = fit_model(ModelSpec.default(family, **({"n_estimators": 10} if family in ("ert", "rf") else {})), X, y)
    proba = predict_proba(m, rng.standard_normal((40, 3)) * 3)
    assert proba.shape == (40, 2)
    assert ((proba >= 0) & (proba <= 1)).all()
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)
    with pytest.raises(FeatureCountMismatch):
        predict_proba(m, np.zeros((1, 4)))


@pytest.mark.parametrize("family", ["ert", "rf", "logreg", "lda", "qda"])
def test_serialization_round_trip(rng, tmp_path, family):
    X, y = blobs(rng, n=60, sep=1.0, p=3)
    m = fit_model(ModelSpec.default(family, **({"n_estimators": 5} if family in ("ert", "rf") else {})), X, y)
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert back.feature_count == 3
    assert back.predict_proba(X).tobytes() == m.predict_proba(X).tobytes()


# -- logistic regression -------------------------------------------------------
def test_logreg_monotone_in_x():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    p = fit_logreg(X, [0, 0, 1, 1]).predict_proba(X)[:, 1]
    assert (np.diff(p) > 0).all()


def test_logreg_zero_column_gets_zero_weight(rng):
    X, y = blobs(rng, n=80, sep=2.0, p=2)
    X = np.column_stack([X, np.zeros(len(X))])
    m = fit_logreg(X, y)
    assert m.coef[2] == 0.0
    assert m.converged


def test_logreg_gradient_vanishes_at_optimum(rng):
    X, y = blobs(rng, n=100, sep=1.5, p=3)
    tol = 1e-8
    m = fit_logreg(X, y, l2=1.0, tol=tol)
    Z = (X - m.mean) / m.scale
    theta = m.standardized_params()
    # central differences, independent of the analytic gradient used by the fit
    h = 1e-5
    fd = np.array([
        (objective(theta + h * e, Z, y, 1.0) - objective(theta - h * e, Z, y, 1.0)) / (2 * h)
        for e in np.eye(len(theta))
    ])
    assert np.max(np.abs(fd)) < tol + 1e-8


def test_logreg_reports_non_convergence(rng):
    X, y = blobs(rng, n=60, sep=1.0, p=3)
    with pytest.warns(DidNotConverge):
        m = fit_logreg(X, y, max_iter=2, tol=1e-12)
    assert not m.converged


def test_logreg_rejects_inf():
    with pytest.raises(NonFiniteInput):
        fit_logreg([[0.0], [np.inf], [1.0], [2.0]], [0, 0, 1, 1])


# -- discriminants -------------------------------------------------------------
def test_lda_threshold_between_symmetric_classes(rng):
    n = 2000
    x = np.concatenate([rng.normal(-1, 1, n), rng.normal(1, 1, n)])[:, None]
    y = np.repeat([0, 1], n)
    m = fit_lda(x, y)
    lo, hi = -3.0, 3.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if m.predict_proba([[mid]])[0, 1] < 0.5:
            lo = mid
        else:
            hi = mid
    assert abs(lo) < 0.1


def test_qda_duplicate_columns_singular(rng):
    X, y = blobs(rng, n=40, p=2)
    with pytest.raises(SingularCovariance):
        fit_qda(np.column_stack([X, X[:, 0]]), y, reg=0.0)
    fit_qda(np.column_stack([X, X[:, 0]]), y, reg=1e-2)  # shrinkage rescues it


def test_class_too_small(rng):
    X = rng.standard_normal((5, 2))
    with pytest.raises(ClassTooSmall):
        fit_lda(X, [0, 0, 0, 0, 1])
    with pytest.raises(ClassTooSmall):
        fit_qda(X, [0, 0, 0, 0, 1])


def test_lda_and_qda_agree_for_shared_covariance(rng):
    n = 3000
    cov = np.array([[1.0, 0.5], [0.5, 2.0]])
    chol = np.linalg.cholesky(cov)
    X = np.vstack([rng.standard_normal((n, 2)) @ chol.T, rng.standard_normal((n, 2)) @ chol.T + [1.5, 0.5]])
    y = np.repeat([0, 1], n)
    g = np.linspace(-3, 4, 61)
    grid = np.array([(a, b) for a in g for b in g])
    lda = fit_lda(X, y).predict(grid)
    qda = fit_qda(X, y, reg=0.0).predict(grid)
    assert (lda == qda).mean() >= 0.97


# -- properties ----------------------------------------------------------------
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), family=st.sampled_from(["ert", "rf", "logreg", "lda", "qda"]))
def test_same_seed_same_model(seed, family):
    rng = np.random.default_rng(seed)
    X, y = blobs(rng, n=40, sep=1.0, p=3)
    spec = ModelSpec.default(family, **({"n_estimators": 5} if family in ("ert", "rf") else {}))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DidNotConverge)
        a = fit_model(spec, X, y, seed=seed % 1000).predict_proba(X)
        b = fit_model(spec, X, y, seed=seed % 1000).predict_proba(X)
    assert a.tobytes() == b.tobytes()
    assert ((a >= 0) & (a <= 1)).all()
    np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-9)


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec.default("svm")
    with pytest.raises(ValueError):
        ModelSpec.default("lda", l2=1.0)
    with pytest.raises(ValueError):
        ModelSpec.default("ert", profile="fast")
    assert ModelSpec.default("ert", "tuned").resolved()["n_estimators"] == 1000
