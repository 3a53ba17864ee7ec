"""Filter baselines: mRMR (difference form) and an MDRMR-style variant."""

from __future__ import annotations

import numpy as np

from micmac.dataset import Dataset
from micmac.selectors.info import discretize, mi_with_columns

# The MDRMR scoring rule below is a stand-in, not a published formula.
MDRMR_APPROXIMATE = True

_TIE_TOL = 1e-12


def _pick(scores: np.ndarray, names: list[str], available: np.ndarray) -> int:
    """Index of the best available score; near-equal scores go to the smaller name."""
    s = np.where(available, scores, -np.inf)
    top = s.max()
    tied = np.flatnonzero(available & (s >= top - _TIE_TOL))
    return int(min(tied, key=lambda j: names[j]))


def _greedy(train: Dataset, k: int, rule: str, n_std: float) -> list[str]:
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > train.n_features:
        raise ValueError(f"k={k} exceeds the {train.n_features} available features")
    codes = discretize(train.values, n_std)
    names = list(train.feature_names)
    relevance = mi_with_columns(codes, train.labels)
    redundancy = np.zeros(train.n_features)
    available = np.ones(train.n_features, dtype=bool)
    order = []
    for step in range(k):
        if step == 0:
            scores = relevance
        elif rule == "mid":
            scores = relevance - redundancy / step
        else:
            scores = relevance * (1.0 + step) / (1.0 + redundancy)
        j = _pick(scores, names, available)
        order.append(j)
        available[j] = False
        if step + 1 < k:
            redundancy += mi_with_columns(codes, codes[:, j])
    return [names[j] for j in order]


def mrmr_select(train: Dataset, k: int, n_std: float = 1.0) -> list[str]:
    """Greedy mRMR with the MID criterion ``I(f;y) - mean_s I(f;s)``.

    Features are discretized into three levels at mean +- ``n_std`` std.
    """
    return _greedy(train, k, "mid", n_std)


def mdrmr_select(train: Dataset, k: int, n_std: float = 1.0) -> list[str]:
    """Dynamic-relevance variant: ``I(f;y) * (1 + |S|) / (1 + sum_s I(f;s))``.

    This is an approximation (see ``MDRMR_APPROXIMATE``); reports flag it.
    """
    return _greedy(train, k, "dynamic", n_std)
