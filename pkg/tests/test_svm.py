import itertools
import warnings

import numpy as np
import pytest

from cmgender.features import SparseVector
from cmgender.learners import rbf_kernel
from cmgender.learners.svm import (
    ConvergenceWarning,
    SvmModel,
    dual_objective,
    fit_svm,
    rbf_matrix,
    solve_smo,
)


def separable(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-2, 0.6, (10, 2)), rng.normal(2, 0.6, (10, 2))])
    y = np.r_[np.ones(10), -np.ones(10)]
    return X, y


def kkt_violation(alpha, y, K, b, C):
    yf = y * (K @ (alpha * y) + b)
    return np.where(alpha <= 0, np.maximum(0, 1 - yf),
                    np.where(alpha >= C, np.maximum(0, yf - 1), np.abs(yf - 1))).max()


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("C", [0.1, 1.0, 10.0])
def test_kkt_on_separable_set(seed, C):
    X, y = separable(seed)
    K = rbf_matrix(X, X, 0.5)
    r = solve_smo(K, y, C)
    assert r.converged
    assert np.all((r.alpha >= 0) & (r.alpha <= C))
    assert abs(r.alpha @ y) < 1e-6
    assert kkt_violation(r.alpha, y, K, r.b, C) < 1e-3


def test_separable_training_accuracy():
    X, y = separable()
    m = fit_svm(X, y, C=10, gamma=0.5)
    assert np.array_equal(m.predict_signs(X), y)


def test_xor():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array([1, 1, -1, -1], dtype=float)
    m = fit_svm(X, y, C=10, gamma=2.0)
    assert np.array_equal(m.predict_signs(X), y)


@pytest.mark.parametrize("seed", range(3))
def test_dual_beats_alpha_grid(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(6, 2))
    y = np.array([1, 1, 1, -1, -1, -1], dtype=float)
    K = rbf_matrix(X, X, 1.0)
    C = 1.0
    r = solve_smo(K, y, C, tol=1e-8)
    ours = dual_objective(r.alpha, y, K)
    best = -np.inf
    for a in itertools.product(np.arange(0, 1.0001, 0.25), repeat=6):
        a = np.array(a)
        if abs(a @ y) < 1e-12:
            best = max(best, dual_objective(a, y, K))
    assert ours >= best - 1e-9


def test_duplicate_non_support_vector_is_harmless():
    X, y = separable()
    m = fit_svm(X, y, C=1, gamma=0.5)
    far = int(np.argmax(np.abs(m.decision(X))))
    assert not np.any(np.all(m.support == X[far], axis=1))
    m2 = fit_svm(np.vstack([X, X[far]]), np.r_[y, y[far]], C=1, gamma=0.5)
    probe = np.random.default_rng(5).normal(size=(30, 2)) * 2
    assert np.allclose(m.decision(probe), m2.decision(probe), atol=1e-3)


def test_degenerate_box_gives_defined_bias():
    X, y = separable()
    m = fit_svm(X, y, C=1e-6, gamma=0.5)
    assert np.isfinite(m.b)
    assert np.all(m.alpha <= 1e-6)


def test_convergence_warning_on_tiny_budget():
    X, y = separable()
    with pytest.warns(ConvergenceWarning):
        fit_svm(X, y, C=100, gamma=0.01, max_passes=0)


def test_rejects_single_class_and_bad_params():
    X, y = separable()
    with pytest.raises(ValueError):
        fit_svm(X, np.ones(len(y)))
    with pytest.raises(ValueError):
        fit_svm(X, y, C=0)


def test_rbf_kernel_on_sparse_vectors():
    x = SparseVector.from_dense([1, 0, 2])
    z = SparseVector.from_dense([0, 0, 1])
    assert rbf_kernel(x, z, 0.5) == pytest.approx(np.exp(-0.5 * 2))
    assert rbf_kernel(x, x, 0.5) == 1.0
    with pytest.raises(ValueError):
        rbf_kernel(x, SparseVector(2), 1.0)


def test_row_cache_path_matches_full_gram(monkeypatch):
    from cmgender.learners import svm

    X, y = separable(3)
    full = fit_svm(X, y, C=1, gamma=0.5)
    monkeypatch.setattr(svm, "FULL_GRAM_LIMIT", 0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cached = fit_svm(X, y, C=1, gamma=0.5)
    assert np.allclose(full.alpha, cached.alpha) and full.b == pytest.approx(cached.b)


def test_serialization_round_trip():
    X, y = separable()
    m = fit_svm(X, y, C=1, gamma=0.5)
    back = SvmModel.from_dict(m.to_dict())
    assert np.array_equal(back.decision(X), m.decision(X))
