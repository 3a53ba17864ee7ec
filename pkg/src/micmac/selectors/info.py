"""Discretization and plug-in mutual information (natural log)."""

from __future__ import annotations

import numpy as np


def mutual_information(a, b) -> float:
    """Plug-in estimate ``sum p(a,b) ln(p(a,b) / (p(a) p(b)))`` over observed cells."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty vectors")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    ia = ia.ravel()
    ib = ib.ravel()
    nb = ib.max() + 1
    joint = np.bincount(ia * nb + ib).astype(float)
    cells = np.flatnonzero(joint)
    n = a.size
    pa = np.bincount(ia) / n
    pb = np.bincount(ib) / n
    pab = joint[cells] / n
    mi = np.sum(pab * np.log(pab / (pa[cells // nb] * pb[cells % nb])))
    return max(float(mi), 0.0)


def discretize(X: np.ndarray, n_std: float = 1.0) -> np.ndarray:
    """Three levels per column: at or below mean - n_std*std (0), at or above
    mean + n_std*std (2), else 1. Inclusive edges keep a balanced binary column
    in two levels; constant columns get level 1."""
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    codes = np.ones(X.shape, dtype=np.int8)
    moving = sd > 0
    codes[(X <= mu - n_std * sd) & moving] = 0
    codes[(X >= mu + n_std * sd) & moving] = 2
    return codes


def mi_with_columns(codes: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Mutual information of every column of a coded matrix with one discrete vector."""
    codes = np.asarray(codes)
    n, p = codes.shape
    _, t = np.unique(target, return_inverse=True)
    levels = np.unique(codes)
    out = np.zeros(p)
    pt = np.bincount(t) / n
    for la in levels:
        in_a = codes == la
        pa = in_a.sum(axis=0) / n
        for lb in range(len(pt)):
            pab = (in_a & (t == lb)[:, None]).sum(axis=0) / n
            ok = pab > 0
            out[ok] += pab[ok] * np.log(pab[ok] / (pa[ok] * pt[lb]))
    return np.maximum(out, 0.0)
