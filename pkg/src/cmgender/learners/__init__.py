"""Naive Bayes, RBF-kernel SVM and random forest behind one train/predict
facade, plus author-grouped grid search."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from ..corpus import Gender
from ..features import FeatureMatrix, SparseVector
from ..folds import FoldAssignment
from .forest import DecisionTree, ForestModel, build_tree, fit_random_forest, resolve_mtry
from .naive_bayes import NaiveBayesModel, fit_naive_bayes
from .svm import ConvergenceWarning, SvmModel, fit_svm, rbf_matrix, solve_smo, sq_distances

MODEL_FORMAT_VERSION = 1


class ModelKind(str, Enum):
    NAIVE_BAYES = "nb"
    SVM_RBF = "svm"
    RANDOM_FOREST = "rf"

    @property
    def title(self) -> str:
        return {"nb": "Naive Bayes", "svm": "Kernel SVM", "rf": "Random Forest"}[self.value]


DEFAULT_PARAMS: dict[ModelKind, dict[str, Any]] = {
    ModelKind.NAIVE_BAYES: {"alpha": 1.0},
    ModelKind.SVM_RBF: {"C": 1.0, "gamma": "1/D", "tol": 1e-3, "max_passes": None},
    ModelKind.RANDOM_FOREST: {"trees": 100, "max_depth": None, "mtry": "sqrt", "seed": 0,
                              "bootstrap": True},
}

DEFAULT_GRIDS: dict[ModelKind, dict[str, list]] = {
    ModelKind.NAIVE_BAYES: {"alpha": [0.1, 0.5, 1.0]},
    ModelKind.SVM_RBF: {"C": [0.1, 1, 10, 100], "gamma": [0.001, 0.01, 0.1, "1/D"]},
    ModelKind.RANDOM_FOREST: {"trees": [100], "max_depth": [None, 20]},
}


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        merged = {**DEFAULT_PARAMS[self.kind], **self.params}
        object.__setattr__(self, "params", merged)
        for cand in self.candidates():
            _check_params(self.kind, cand)

    @classmethod
    def with_default_grid(cls, kind, **params) -> "ModelSpec":
        kind = ModelKind(kind)
        return cls(kind, params, DEFAULT_GRIDS[kind])

    def candidates(self) -> list[dict]:
        if not self.grid:
            return [dict(self.params)]
        keys = list(self.grid)
        return [{**self.params, **dict(zip(keys, combo))}
                for combo in itertools.product(*(self.grid[k] for k in keys))]

    def as_dict(self) -> dict:
        return {"kind": self.kind.value, "params": self.params, "grid": self.grid}


def _check_params(kind: ModelKind, p: dict) -> None:
    if kind is ModelKind.NAIVE_BAYES and not p["alpha"] > 0:
        raise ValueError("alpha must be > 0")
    if kind is ModelKind.SVM_RBF:
        if not p["C"] > 0:
            raise ValueError("C must be > 0")
        if p["gamma"] != "1/D" and not float(p["gamma"]) > 0:
            raise ValueError("gamma must be > 0")
    if kind is ModelKind.RANDOM_FOREST and int(p["trees"]) < 1:
        raise ValueError("trees must be >= 1")


def resolve_gamma(gamma, D: int) -> float:
    if gamma == "1/D":
        return 1.0 / max(D, 1)
    return float(gamma)


# ---------------------------------------------------------------------------
# train / predict

def _arrays(m: FeatureMatrix) -> tuple[np.ndarray, np.ndarray]:
    return m.to_dense(), m.signs()


def train_arrays(kind: ModelKind, params: dict, X: np.ndarray, y: np.ndarray, sqdist=None):
    kind = ModelKind(kind)
    p = {**DEFAULT_PARAMS[kind], **params}
    D = X.shape[1]
    if kind is ModelKind.NAIVE_BAYES:
        return fit_naive_bayes(X, y, p["alpha"])
    if kind is ModelKind.SVM_RBF:
        return fit_svm(X, y, float(p["C"]), resolve_gamma(p["gamma"], D), float(p["tol"]),
                       p["max_passes"], sqdist=sqdist)
    return fit_random_forest(X, y, int(p["trees"]), p["max_depth"], resolve_mtry(p["mtry"], D),
                             int(p["seed"]), bool(p["bootstrap"]))


def train(spec_or_kind, m: FeatureMatrix, **params):
    """Train with fixed hyperparameters (no search)."""
    if isinstance(spec_or_kind, ModelSpec):
        kind, params = spec_or_kind.kind, {**spec_or_kind.params, **params}
    else:
        kind = ModelKind(spec_or_kind)
    X, y = _arrays(m)
    return train_arrays(kind, params, X, y)


def train_naive_bayes(m: FeatureMatrix, alpha: float = 1.0) -> NaiveBayesModel:
    X, y = _arrays(m)
    return fit_naive_bayes(X, y, alpha)


def train_svm_rbf(m: FeatureMatrix, C: float = 1.0, gamma: float = 1.0, tol: float = 1e-3,
                  max_passes: int | None = None) -> SvmModel:
    X, y = _arrays(m)
    return fit_svm(X, y, C, gamma, tol, max_passes)


def train_random_forest(m: FeatureMatrix, trees: int = 100, max_depth: int | None = None,
                        mtry="sqrt", seed: int = 0, bootstrap: bool = True) -> ForestModel:
    X, y = _arrays(m)
    return fit_random_forest(X, y, trees, max_depth, mtry, seed, bootstrap)


def rbf_kernel(x: SparseVector, z: SparseVector, gamma: float) -> float:
    """exp(-gamma * ||x - z||^2) over sparse vectors."""
    if x.dimension != z.dimension:
        raise ValueError(f"dimension mismatch: {x.dimension} != {z.dimension}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    a, b = dict(x.items()), dict(z.items())
    d2 = sum((a.get(i, 0) - b.get(i, 0)) ** 2 for i in a.keys() | b.keys())
    return float(np.exp(-gamma * d2))


def predict(model, x: SparseVector) -> Gender:
    if x.dimension != model.dim:
        raise ValueError(f"vector dimension {x.dimension} != model dimension {model.dim}")
    return Gender.from_sign(float(model.predict_signs(x.to_dense()[None, :])[0]))


def predict_matrix(model, m: FeatureMatrix) -> list[Gender]:
    if m.dimension != model.dim:
        raise ValueError(f"matrix dimension {m.dimension} != model dimension {model.dim}")
    if len(m) == 0:
        return []
    return [Gender.from_sign(s) for s in model.predict_signs(m.to_dense())]


# ---------------------------------------------------------------------------
# grid search

@dataclass(frozen=True)
class GridResult:
    candidates: tuple[dict, ...]
    accuracies: tuple[float, ...]
    best_index: int

    @property
    def best(self) -> dict:
        return self.candidates[self.best_index]

    @property
    def best_accuracy(self) -> float:
        return self.accuracies[self.best_index]

    def rows(self) -> list[tuple[dict, float]]:
        return list(zip(self.candidates, self.accuracies))


def grid_search(spec: ModelSpec, m: FeatureMatrix, folds: FoldAssignment) -> GridResult:
    """Mean grouped-CV accuracy of every candidate; the best is the first one
    reaching the maximum. Folds whose training part lacks a class are skipped."""
    cands = spec.candidates()
    if not cands:
        raise ValueError("empty grid")
    X, y = _arrays(m)
    splits = []
    for f in range(folds.k):
        tr = np.array(folds.train_rows(f), dtype=int)
        te = np.array(folds.test_rows(f), dtype=int)
        if len(te) and len(tr) and np.any(y[tr] > 0) and np.any(y[tr] < 0):
            splits.append((tr, te))
    sqd = sq_distances(X, X) if spec.kind is ModelKind.SVM_RBF and splits else None

    accs = []
    for cand in cands:
        if not splits:
            accs.append(0.0)
            continue
        fold_acc = []
        for tr, te in splits:
            sub = sqd[np.ix_(tr, tr)] if sqd is not None else None
            model = train_arrays(spec.kind, cand, X[tr], y[tr], sqdist=sub)
            fold_acc.append(float(np.mean(model.predict_signs(X[te]) == y[te])))
        accs.append(float(np.mean(fold_acc)))
    best = int(np.argmax(accs))  # first maximum
    return GridResult(tuple(cands), tuple(accs), best)


# ---------------------------------------------------------------------------
# model files

_MODEL_TYPES = {"nb": NaiveBayesModel, "svm": SvmModel, "rf": ForestModel}


def model_to_dict(model) -> dict:
    return {"format": "cmgender-model", "version": MODEL_FORMAT_VERSION, "kind": model.kind,
            "label_signs": {"male": 1, "female": -1}, "params": model.to_dict()}


def model_from_dict(d: dict):
    if d.get("format") != "cmgender-model" or d.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError("unsupported model file")
    if d.get("label_signs") != {"male": 1, "female": -1}:
        raise ValueError("model file uses a different label convention")
    return _MODEL_TYPES[d["kind"]].from_dict(d["params"])


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model))


def loads_model(text: str):
    return model_from_dict(json.loads(text))


__all__ = [
    "ConvergenceWarning", "DecisionTree", "ForestModel", "GridResult", "ModelKind", "ModelSpec",
    "NaiveBayesModel", "SvmModel", "build_tree", "dumps_model", "fit_naive_bayes",
    "fit_random_forest", "fit_svm", "grid_search", "loads_model", "model_from_dict",
    "model_to_dict", "predict", "predict_matrix", "rbf_kernel", "rbf_matrix", "solve_smo",
    "train", "train_arrays", "train_naive_bayes", "train_random_forest", "train_svm_rbf",
]
