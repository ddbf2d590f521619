"""Soft-margin kernel SVM with an RBF kernel, trained by SMO.

The solver works on the dual

    max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij
    s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0

and picks, at every step, the maximal KKT-violating pair (i, j), then
applies the analytic two-variable update. It stops once the violation gap
falls below ``tol``.
"""

from __future__ import annotations

import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

FULL_GRAM_LIMIT = 5000


class ConvergenceWarning(UserWarning):
    pass


def sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at 0."""
    a2 = np.einsum("ij,ij->i", A, A)
    b2 = np.einsum("ij,ij->i", B, B)
    d = a2[:, None] + b2[None, :] - 2.0 * (A @ B.T)
    np.maximum(d, 0.0, out=d)
    return d


def rbf_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * sq_distances(A, B))


class _KernelRows:
    """Kernel row access: the full Gram matrix when small, an LRU row cache otherwise."""

    def __init__(self, X: np.ndarray, gamma: float, sqdist: np.ndarray | None = None,
                 cache_rows: int = 2000):
        self.n = len(X)
        self.X = X
        self.gamma = gamma
        self.full = None
        if sqdist is not None:
            self.full = np.exp(-gamma * sqdist)
        elif self.n <= FULL_GRAM_LIMIT:
            self.full = rbf_matrix(X, X, gamma)
        else:
            self.sq = np.einsum("ij,ij->i", X, X)
            self.cache: OrderedDict[int, np.ndarray] = OrderedDict()
            self.cache_rows = cache_rows

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        r = self.cache.get(i)
        if r is None:
            d = self.sq + self.sq[i] - 2.0 * (self.X @ self.X[i])
            r = np.exp(-self.gamma * np.maximum(d, 0.0))
            self.cache[i] = r
            if len(self.cache) > self.cache_rows:
                self.cache.popitem(last=False)
        else:
            self.cache.move_to_end(i)
        return r

    def diag(self) -> np.ndarray:
        if self.full is not None:
            return np.diag(self.full).copy()
        return np.ones(self.n)


@dataclass
class SmoResult:
    alpha: np.ndarray
    b: float
    converged: bool
    iterations: int
    gap: float


def solve_smo(kernel, y: np.ndarray, C: float, tol: float = 1e-3,
              max_iter: int | None = None) -> SmoResult:
    """SMO with maximal-violating-pair selection.

    ``kernel`` is either an (n, n) Gram matrix or an object with ``row(i)``
    and ``diag()``.
    """
    if isinstance(kernel, np.ndarray):
        K = kernel
        row = K.__getitem__
        diag = np.diag(K).copy()
    else:
        row = kernel.row
        diag = kernel.diag()
    y = np.asarray(y, dtype=float)
    n = len(y)
    if max_iter is None:
        max_iter = 10 * n * n
    alpha = np.zeros(n)
    F = np.zeros(n)  # sum_s alpha_s y_s K(x_s, x_t), i.e. f(x_t) - b
    pos = y > 0
    neg = ~pos
    it = 0
    gap = np.inf
    converged = False
    while True:
        v = y - F
        up = (pos & (alpha < C)) | (neg & (alpha > 0))
        low = (neg & (alpha < C)) | (pos & (alpha > 0))
        if not up.any() or not low.any():
            converged, gap = True, 0.0
            break
        vu = np.where(up, v, -np.inf)
        vl = np.where(low, v, np.inf)
        i = int(np.argmax(vu))
        j = int(np.argmin(vl))
        gap = vu[i] - vl[j]
        if gap < tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1

        Ki, Kj = row(i), row(j)
        eta = diag[i] + diag[j] - 2.0 * Ki[j]
        if eta <= 0:
            eta = 1e-12
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            L, H = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            L, H = max(0.0, ai + aj - C), min(C, ai + aj)
        # E_i - E_j = v_j - v_i
        aj_new = _snap(min(max(aj + y[j] * (v[j] - v[i]) / eta, L), H), C)
        # recover a_i from the conserved quantity so bounds are hit exactly
        ai_new = _snap((ai + aj) - aj_new if y[i] == y[j] else (ai - aj) + aj_new, C)
        if ai_new == ai and aj_new == aj:
            # numerically stalled; report as not converged
            break
        alpha[i], alpha[j] = ai_new, aj_new
        F += (ai_new - ai) * y[i] * Ki + (aj_new - aj) * y[j] * Kj

    return SmoResult(alpha, _bias(alpha, y, F, C), converged, it, float(gap))


def _snap(a: float, C: float) -> float:
    eps = 1e-12 * C
    if a <= eps:
        return 0.0
    if a >= C - eps:
        return C
    return a


def _bias(alpha: np.ndarray, y: np.ndarray, F: np.ndarray, C: float) -> float:
    v = y - F
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(v[free].mean())
    pos = y > 0
    lower = ((alpha <= 0) & pos) | ((alpha >= C) & ~pos)
    upper = ((alpha <= 0) & ~pos) | ((alpha >= C) & pos)
    lo = v[lower].max() if lower.any() else None
    hi = v[upper].min() if upper.any() else None
    if lo is None and hi is None:
        return 0.0
    if lo is None:
        return float(hi)
    if hi is None:
        return float(lo)
    return float((lo + hi) / 2)


def dual_objective(alpha: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


@dataclass(frozen=True, eq=False)
class SvmModel:
    C: float
    gamma: float
    support: np.ndarray  # (n_sv, D)
    alpha: np.ndarray  # (n_sv,)
    sv_signs: np.ndarray  # (n_sv,)
    b: float
    dim_: int
    converged: bool = True
    iterations: int = 0

    kind = "svm"

    @property
    def dim(self) -> int:
        return self.dim_

    @property
    def coef(self) -> np.ndarray:
        return self.alpha * self.sv_signs

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if len(self.alpha) == 0:
            return np.full(len(X), self.b)
        return rbf_matrix(X, self.support, self.gamma) @ self.coef + self.b

    def predict_signs(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.decision(X) >= 0, 1, -1)

    def to_dict(self) -> dict:
        sv = [[[int(j), float(row[j])] for j in np.flatnonzero(row)] for row in self.support]
        return {"C": self.C, "gamma": self.gamma, "b": self.b, "dim": self.dim_,
                "alpha": self.alpha.tolist(), "sv_signs": self.sv_signs.tolist(),
                "support": sv, "converged": self.converged, "iterations": self.iterations}

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        dim = int(d["dim"])
        support = np.zeros((len(d["support"]), dim))
        for r, pairs in enumerate(d["support"]):
            for j, v in pairs:
                support[r, j] = v
        return cls(float(d["C"]), float(d["gamma"]), support,
                   np.asarray(d["alpha"], dtype=float), np.asarray(d["sv_signs"], dtype=float),
                   float(d["b"]), dim, bool(d["converged"]), int(d["iterations"]))


def fit_svm(X: np.ndarray, y: np.ndarray, C: float = 1.0, gamma: float = 1.0,
            tol: float = 1e-3, max_passes: int | None = None,
            sqdist: np.ndarray | None = None) -> SvmModel:
    """Train an RBF SVM. ``y`` holds +1 (male) / -1 (female).

    ``max_passes`` caps the work at ``max_passes * n`` pair updates
    (default ``10 * n`` passes). ``sqdist`` may carry precomputed pairwise
    squared distances of the rows of ``X``.
    """
    if C <= 0 or gamma <= 0:
        raise ValueError("C and gamma must be positive")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("SVM needs both classes in the training data")
    if max_passes is None:
        max_passes = 10 * n
    res = solve_smo(_KernelRows(X, gamma, sqdist), y, C, tol, max_passes * n)
    if not res.converged:
        warnings.warn(f"SMO stopped after {res.iterations} updates with gap {res.gap:.3g} > tol",
                      ConvergenceWarning, stacklevel=2)
    sv = res.alpha > 0
    return SvmModel(float(C), float(gamma), X[sv], res.alpha[sv], y[sv], res.b, X.shape[1],
                    res.converged, res.iterations)
