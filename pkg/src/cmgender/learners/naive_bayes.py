"""Multinomial naive Bayes with additive (Laplace/Lidstone) smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# row 0 = male, row 1 = female throughout
CLASSES = (1, -1)


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    alpha: float
    log_prior: np.ndarray  # (2,)
    log_likelihood: np.ndarray  # (2, D)

    kind = "nb"

    @property
    def dim(self) -> int:
        return self.log_likelihood.shape[1]

    def log_scores(self, X: np.ndarray) -> np.ndarray:
        """Unnormalized log posteriors, shape (n, 2) ordered (male, female)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.log_prior + X @ self.log_likelihood.T

    def decision(self, X: np.ndarray) -> np.ndarray:
        s = self.log_scores(X)
        return s[:, 0] - s[:, 1]

    def predict_signs(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.decision(X) >= 0, 1, -1)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "log_prior": self.log_prior.tolist(),
                "log_likelihood": self.log_likelihood.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NaiveBayesModel":
        ll = np.asarray(d["log_likelihood"], dtype=float).reshape(2, -1)
        return cls(float(d["alpha"]), np.asarray(d["log_prior"], dtype=float), ll)


def fit_naive_bayes(X: np.ndarray, y: np.ndarray, alpha: float = 1.0) -> NaiveBayesModel:
    """``y`` holds +1 (male) / -1 (female)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n, D = X.shape
    counts = np.array([np.sum(y == c) for c in CLASSES])
    if np.any(counts == 0):
        raise ValueError("naive Bayes needs both classes in the training data")
    log_prior = np.log(counts / n)
    fc = np.vstack([X[y == c].sum(axis=0) for c in CLASSES])
    totals = fc.sum(axis=1, keepdims=True)
    log_likelihood = np.log((fc + alpha) / (totals + alpha * D))
    return NaiveBayesModel(float(alpha), log_prior, log_likelihood)
