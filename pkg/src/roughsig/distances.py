"""Distances between scalar sample sets: Wasserstein-1, Prokhorov bound, KS.

Path-space distances are certified through scalar projections (signature
coordinates, sup norms); between empirical laws on the line the W1 distance
is exactly the mean absolute difference of sorted samples.
"""

from __future__ import annotations

import numpy as np


def _clean(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float).reshape(-1)
    if xs.size == 0:
        raise ValueError("empty sample set")
    return xs


def wasserstein1_scalar(xs, ys) -> float:
    """Exact W1 between the empirical laws of two equal-count scalar samples.

    Unequal counts are trimmed to the smaller count (leading entries) before
    sorting; with equal counts the optimal coupling pairs order statistics.
    """
    xs, ys = _clean(xs), _clean(ys)
    n = min(xs.size, ys.size)
    return float(np.mean(np.abs(np.sort(xs[:n]) - np.sort(ys[:n]))))


def prokhorov_upper(w1: float) -> float:
    """Upper bound on the Prokhorov distance: pi(mu, nu)^2 <= w1(mu, nu)."""
    if w1 < 0:
        raise ValueError("w1 must be nonnegative")
    return float(np.sqrt(w1))


def cdf_distance(xs, ys) -> float:
    """Two-sample Kolmogorov-Smirnov statistic, exact over pooled points."""
    xs, ys = np.sort(_clean(xs)), np.sort(_clean(ys))
    pooled = np.concatenate([xs, ys])
    Fx = np.searchsorted(xs, pooled, side="right") / xs.size
    Fy = np.searchsorted(ys, pooled, side="right") / ys.size
    return float(np.max(np.abs(Fx - Fy)))


METRICS = {
    "w1": wasserstein1_scalar,
    "ks": cdf_distance,
    "prokhorov": lambda xs, ys: prokhorov_upper(wasserstein1_scalar(xs, ys)),
}


def distance_with_se(metric: str, xs, ys, n_boot: int = 200, seed: int = 0):
    """Metric value plus a bootstrap standard error (n_boot resamples)."""
    try:
        fn = METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}") from None
    xs, ys = _clean(xs), _clean(ys)
    value = fn(xs, ys)
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    boots = np.empty(n_boot)
    for b in range(n_boot):
        bx = xs[gen.integers(0, xs.size, xs.size)]
        by = ys[gen.integers(0, ys.size, ys.size)]
        boots[b] = fn(bx, by)
    return value, float(boots.std(ddof=1))
