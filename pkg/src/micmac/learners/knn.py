"""K-nearest-neighbour classifier with a fully deterministic tie-break."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def accumulate_sq_dist(Q: np.ndarray, T: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Squared Euclidean distances between rows of ``Q`` and ``T``.

    Columns are added one at a time, left to right. Callers that grow a
    feature set incrementally rely on this order to get bit-identical sums.
    """
    D = np.zeros((Q.shape[0], T.shape[0])) if out is None else out
    for j in range(Q.shape[1]):
        diff = Q[:, j, None] - T[None, :, j]
        D += diff * diff
    return D


def vote(D: np.ndarray, y_train: np.ndarray, k: int) -> np.ndarray:
    """Majority label among the ``k`` nearest columns of ``D`` (last axis).

    Neighbours are ordered by (distance, training row index). A tied vote
    goes to the single nearest neighbour.
    """
    n_train = D.shape[-1]
    k = min(k, n_train)
    if k == n_train:
        nn = np.broadcast_to(np.arange(n_train), D.shape)
    else:
        nn = np.argpartition(D, k - 1, axis=-1)[..., :k]
        kth = np.take_along_axis(D, nn, -1).max(axis=-1)
        tied = (D <= kth[..., None]).sum(axis=-1) > k
        if tied.any():
            nn = np.array(nn)
            stable = np.argsort(D[tied], axis=-1, kind="stable")[..., :k]
            nn[tied] = stable
    votes = y_train[nn].sum(axis=-1)
    nearest = y_train[np.argmin(D, axis=-1)]
    return np.where(2 * votes > k, 1, np.where(2 * votes < k, 0, nearest)).astype(int)


@dataclass(frozen=True, eq=False)
class KNNModel:
    X: np.ndarray
    y: np.ndarray
    k: int = 3
    kind: str = "knn"

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return vote(accumulate_sq_dist(np.asarray(X, dtype=float), self.X), self.y, self.k)
