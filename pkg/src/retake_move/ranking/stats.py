"""Kruskal-Wallis H test and Dunn post-hoc comparisons with tie corrections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..numerics.special import chi_square_sf, normal_sf


def midranks(values):
    """1-based ranks with ties sharing their average rank."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(sx):
        j = i
        while j + 1 < len(sx) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def tie_sum(values):
    """Sum of t^3 - t over tie groups."""
    _, counts = np.unique(np.asarray(values, dtype=np.float64), return_counts=True)
    c = counts.astype(np.float64)
    return float((c**3 - c).sum())


def _pooled(groups):
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    if any(len(g) == 0 for g in groups):
        raise ValueError("empty group")
    pooled = np.concatenate(groups)
    ranks = midranks(pooled)
    bounds = np.cumsum([0] + [len(g) for g in groups])
    return groups, pooled, [ranks[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def kruskal_wallis(groups):
    """Tie-corrected H statistic and its chi-square p-value with k-1 degrees of freedom."""
    groups, pooled, ranks = _pooled(groups)
    n = len(pooled)
    h = 12.0 / (n * (n + 1)) * sum(r.sum() ** 2 / len(r) for r in ranks) - 3.0 * (n + 1)
    correction = 1.0 - tie_sum(pooled) / (n**3 - n)
    if correction <= 0:
        # Every observation tied: no evidence of any difference.
        return 0.0, 1.0
    h = max(h / correction, 0.0)
    return float(h), float(chi_square_sf(h, len(groups) - 1))


@dataclass
class DunnResult:
    i: int
    j: int
    z: float
    p: float
    p_adjusted: float


def dunn_posthoc(groups):
    """All pairwise Dunn z tests (mean rank i minus mean rank j), two-sided, Bonferroni-adjusted."""
    groups, pooled, ranks = _pooled(groups)
    n = len(pooled)
    scale = n * (n + 1) / 12.0 - tie_sum(pooled) / (12.0 * (n - 1))
    k = len(groups)
    m = k * (k - 1) // 2
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            diff = ranks[i].mean() - ranks[j].mean()
            se = math.sqrt(max(scale, 0.0) * (1.0 / len(ranks[i]) + 1.0 / len(ranks[j])))
            z = diff / se if se > 0 else 0.0
            p = min(1.0, 2.0 * normal_sf(abs(z)))
            out.append(DunnResult(i, j, float(z), p, min(1.0, p * m)))
    return out
