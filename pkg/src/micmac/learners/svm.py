"""Soft-margin SVM with an RBF kernel, trained by sequential minimal optimization.

The dual problem

    max_a  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t.   0 <= a_i <= C,  sum_i a_i y_i = 0

is solved two multipliers at a time. The working pair is the maximal
violating ``i`` together with the ``j`` giving the largest second-order
decrease of the objective; iteration stops when the KKT gap
``max_{I_up} -y G - min_{I_low} -y G`` drops below the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

TAU = 1e-12
MAX_SWEEPS = 10_000


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    if A is B:
        np.fill_diagonal(sq, 0.0)
    return np.exp(-gamma * sq)


def scale_gamma(X: np.ndarray) -> float:
    """``1 / (n_features * mean feature variance)``; 1.0 for constant input."""
    X = np.asarray(X, dtype=float)
    v = X.var(axis=0).mean() if X.size else 0.0
    return 1.0 / (X.shape[1] * v) if v > 0 else 1.0


@njit(cache=True)
def _smo(K, y, C, tol, max_iter, sweep):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    history = np.empty(max_iter // sweep + 2)
    n_hist = 0
    gap = np.inf
    it = 0
    while it < max_iter:
        if it % sweep == 0:
            history[n_hist] = -0.5 * (alpha @ G) + 0.5 * alpha.sum()
            n_hist += 1

        # i: maximal -y*G over I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if y[t] > 0:
                if alpha[t] < C:
                    v = -G[t]
                else:
                    continue
            else:
                if alpha[t] > 0:
                    v = G[t]
                else:
                    continue
            if v >= gmax:
                gmax = v
                i = t

        # j: second-order choice over I_low
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if y[t] > 0:
                if alpha[t] > 0:
                    v = G[t]
                else:
                    continue
            else:
                if alpha[t] < C:
                    v = -G[t]
                else:
                    continue
            if v >= gmax2:
                gmax2 = v
            grad_diff = gmax + v
            if grad_diff > 0 and i >= 0:
                quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                if quad <= 0:
                    quad = TAU
                obj = -(grad_diff * grad_diff) / quad
                if obj <= obj_min:
                    obj_min = obj
                    j = t

        gap = gmax + gmax2
        if gap < tol or i < 0 or j < 0:
            break

        ai_old = alpha[i]
        aj_old = alpha[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai = ai_old + delta
            aj = aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > 0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai = ai_old - delta
            aj = aj_old + delta
            if total > C:
                if ai > C:
                    ai = C
                    aj = total - C
            else:
                if aj < 0:
                    aj = 0.0
                    ai = total
            if total > C:
                if aj > C:
                    aj = C
                    ai = total - C
            else:
                if ai < 0:
                    ai = 0.0
                    aj = total
        alpha[i] = ai
        alpha[j] = aj
        dai = (ai - ai_old) * y[i]
        daj = (aj - aj_old) * y[j]
        for t in range(n):
            G[t] += y[t] * (K[t, i] * dai + K[t, j] * daj)
        it += 1

    history[n_hist] = -0.5 * (alpha @ G) + 0.5 * alpha.sum()
    n_hist += 1
    return alpha, G, it, gap, history[:n_hist]


def _bias(alpha, G, y, C):
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(yG[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)


@dataclass(frozen=True, eq=False)
class SVMModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for the support vectors
    rho: float
    gamma: float
    C: float
    alpha: np.ndarray
    y_signed: np.ndarray
    kkt_gap: float
    n_iter: int
    objective_history: np.ndarray = field(repr=False)
    kind: str = "svm"

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def dual_objective(self) -> float:
        return float(self.objective_history[-1])

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        if len(self.dual_coef) == 0:
            return np.full(len(X), -self.rho)
        return rbf_kernel(X, self.support_vectors, self.gamma) @ self.dual_coef - self.rho

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(np.asarray(X, dtype=float)) > 0).astype(int)


def fit_svm(X: np.ndarray, y: np.ndarray, C: float = 1.0, gamma: float | None = None,
            tol: float = 1e-3) -> SVMModel:
    X = np.ascontiguousarray(X, dtype=float)
    ys = np.where(np.asarray(y) == 1, 1.0, -1.0)
    gamma = scale_gamma(X) if gamma is None else float(gamma)
    K = rbf_kernel(X, X, gamma)
    n = len(ys)
    alpha, G, n_iter, gap, history = _smo(K, ys, float(C), float(tol), MAX_SWEEPS * n, n)
    rho = _bias(alpha, G, ys, C)
    sv = alpha > 0
    return SVMModel(
        support_vectors=X[sv],
        dual_coef=alpha[sv] * ys[sv],
        rho=rho,
        gamma=gamma,
        C=float(C),
        alpha=alpha,
        y_signed=ys,
        kkt_gap=float(gap),
        n_iter=int(n_iter),
        objective_history=history,
    )


def dual_objective(alpha: np.ndarray, y_signed: np.ndarray, K: np.ndarray) -> float:
    v = alpha * y_signed
    return float(alpha.sum() - 0.5 * v @ K @ v)
