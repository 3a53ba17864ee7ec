"""Studentized range distribution and Tukey HSD pairwise comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln, ndtr
from scipy.stats import chi2

# Beyond this many degrees of freedom the scale variable is treated as exactly 1.
_DF_INF = 1e6
_Z_LIMIT = 10.0
_TOL = 1e-7
_PROBE_Q = (0.25, 0.75, 1.5, 2.5, 3.5, 5.0, 7.0, 10.0, 20.0)


def _gauss_legendre_panels(lo: float, hi: float, n_panels: int, order: int = 10):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    return (mid + half * x).ravel(), (half * w).ravel()


@lru_cache(maxsize=None)
def _z_nodes(n_panels: int = 64):
    z, w = _gauss_legendre_panels(-_Z_LIMIT, _Z_LIMIT, n_panels)
    return z, w * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


def _range_cdf(w: np.ndarray, k: int, z_panels: int = 64) -> np.ndarray:
    """P(range of k iid standard normals <= w), elementwise in w."""
    z, wz = _z_nodes(z_panels)
    w = np.asarray(w, dtype=float)
    inner = np.clip(ndtr(z) - ndtr(z - w[..., None]), 0.0, 1.0) ** (k - 1)
    return k * (inner @ wz)


def _scale_log_density(s: np.ndarray, df: float) -> np.ndarray:
    # S = sqrt(chi2_df / df)
    return (math.log(2.0) + (df / 2) * math.log(df / 2) - gammaln(df / 2)
            + (df - 1) * np.log(s) - df * s * s / 2)


def _scale_nodes(df: float, n_panels: int):
    lo = math.sqrt(chi2.ppf(1e-15, df) / df)
    hi = math.sqrt(chi2.isf(1e-15, df) / df)
    s, w = _gauss_legendre_panels(lo, hi, n_panels)
    w = w * np.exp(_scale_log_density(s, df))
    return s, w / w.sum()


# bound on the (q, scale node, z node) block evaluated at once
_BLOCK_ELEMS = 2_000_000


def _cdf_on_nodes(q: np.ndarray, k: int, s: np.ndarray, ws: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    step = max(1, _BLOCK_ELEMS // (len(s) * len(_z_nodes()[0])))
    out = np.empty(len(q))
    for a in range(0, len(q), step):
        out[a:a + step] = _range_cdf(np.multiply.outer(q[a:a + step], s), k) @ ws
    return out


@lru_cache(maxsize=256)
def _outer_rule(k: int, df: float):
    """Panel nodes for the scale integral, refined by doubling until the CDF at
    the probe points changes by less than the tolerance.

    The rule depends only on (k, df), so for fixed (k, df) the CDF is a
    positive combination of functions non-decreasing in q.
    """
    probes = np.array(_PROBE_Q)
    n = 8
    s, ws = _scale_nodes(df, n)
    prev = _cdf_on_nodes(probes, k, s, ws)
    while n < 2048:
        n *= 2
        s2, ws2 = _scale_nodes(df, n)
        cur = _cdf_on_nodes(probes, k, s2, ws2)
        s, ws = s2, ws2
        if np.max(np.abs(cur - prev)) < _TOL:
            break
        prev = cur
    return s, ws


def studentized_range_cdf(q, k: int, df: float) -> float | np.ndarray:
    """P(Q <= q) for the studentized range of ``k`` means with ``df`` degrees of freedom.

    Double integral: over the chi scale ``s`` of ``P(range <= q s)``, the
    inner range probability itself an integral over the normal location.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if not df >= 1:
        raise ValueError("df must be >= 1")
    qa = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(qa)):
        raise ValueError("q must be finite")
    scalar = qa.ndim == 0
    qa = np.atleast_1d(qa)
    out = np.zeros(qa.shape)
    pos = qa > 0
    if pos.any():
        if df >= _DF_INF:
            out[pos] = _cdf_on_nodes(qa[pos], k, np.ones(1), np.ones(1))
        else:
            s, ws = _outer_rule(int(k), float(df))
            out[pos] = _cdf_on_nodes(qa[pos], k, s, ws)
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class TukeyPair:
    group_a: str
    group_b: str
    mean_diff: float
    q: float
    p: float


def tukey_hsd(groups: Mapping[str, Sequence[float]]) -> list[TukeyPair]:
    """All pairwise Tukey(-Kramer) comparisons.

    ``q = |mean_a - mean_b| / sqrt(MSE / n~)`` with MSE from the one-way ANOVA
    over every group and ``n~`` the harmonic mean of the pair's sizes. When
    every group has zero spread, p is 0 for differing means and 1 otherwise.
    """
    names = list(groups)
    data = [np.asarray(groups[g], dtype=float) for g in names]
    if len(data) < 2:
        raise ValueError("need >= 2 groups")
    if any(len(x) < 2 for x in data):
        raise ValueError("every group needs >= 2 values")
    if any(not np.all(np.isfinite(x)) for x in data):
        raise ValueError("group values must be finite")
    k = len(data)
    n_total = sum(len(x) for x in data)
    df = n_total - k
    means = [float(x.mean()) for x in data]
    ssw = sum(float(((x - m) ** 2).sum()) for x, m in zip(data, means))
    mse = ssw / df
    out = []
    for i, j in combinations(range(k), 2):
        diff = means[i] - means[j]
        n_h = 2.0 / (1.0 / len(data[i]) + 1.0 / len(data[j]))
        if mse <= 0:
            equal = diff == 0
            q = 0.0 if equal else math.inf
            p = 1.0 if equal else 0.0
        else:
            q = abs(diff) / math.sqrt(mse / n_h)
            p = min(1.0, max(0.0, 1.0 - studentized_range_cdf(q, k, df)))
        out.append(TukeyPair(names[i], names[j], diff, q, p))
    return out
