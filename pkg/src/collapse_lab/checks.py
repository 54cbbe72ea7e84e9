"""Statistical checks used to validate Monte Carlo output against closed forms."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, stats


def effective_sample_size(log_weights) -> float:
    """Kish ESS (sum w)^2 / sum w^2, computed stably from log weights."""
    lw = np.asarray(log_weights, dtype=float)
    lw = lw - lw.max()
    w = np.exp(lw)
    return float(w.sum() ** 2 / np.sum(w * w))


def ks_critical_value(n: float, m: float, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value c(alpha) sqrt((n+m)/(n m))."""
    c = math.sqrt(-0.5 * math.log(alpha / 2))
    return c * math.sqrt((n + m) / (n * m))


def weighted_ks_2samp(x, log_weights, y) -> float:
    """Sup distance between the weighted ECDF of ``x`` and the ECDF of ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.sort(np.asarray(y, dtype=float))
    lw = np.asarray(log_weights, dtype=float)
    w = np.exp(lw - lw.max())
    order = np.argsort(x)
    xs, cw = x[order], np.cumsum(w[order]) / w.sum()
    grid = np.concatenate([xs, y])
    fx = np.concatenate([[0.0], cw])[np.searchsorted(xs, grid, side="right")]
    fy = np.searchsorted(y, grid, side="right") / len(y)
    return float(np.max(np.abs(fx - fy)))


def chi_square_against_density(samples, density, edges) -> tuple[float, float]:
    """Chi-square GOF of binned ``samples`` against ``density`` integrated per bin.

    Expected bin probabilities come from adaptive quadrature of ``density``;
    the two open tails are folded into the first and last bins.
    Returns (statistic, p-value).
    """
    samples = np.asarray(samples, dtype=float)
    edges = np.asarray(edges, dtype=float)
    probs = np.array([integrate.quad(density, lo, hi, epsabs=1e-13, epsrel=1e-11)[0]
                      for lo, hi in zip(edges[:-1], edges[1:])])
    probs[0] += integrate.quad(density, -np.inf, edges[0])[0]
    probs[-1] += integrate.quad(density, edges[-1], np.inf)[0]
    clipped = np.clip(samples, edges[0], edges[-1])
    counts, _ = np.histogram(clipped, bins=edges)
    expected = probs / probs.sum() * len(samples)
    res = stats.chisquare(counts, expected)
    return float(res.statistic), float(res.pvalue)


def log_linear_slope(times, values, stderrs=None) -> tuple[float, float]:
    """Slope (and its standard error) of log(values) against times.

    With ``stderrs`` the fit is inverse-variance weighted, using the
    delta-method variance (se/value)^2 of each log value.
    """
    t = np.asarray(times, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    if stderrs is None:
        wts = np.ones_like(t)
    else:
        rel = np.asarray(stderrs, dtype=float) / np.asarray(values, dtype=float)
        wts = 1.0 / np.maximum(rel, 1e-300) ** 2
    tb = np.sum(wts * t) / wts.sum()
    yb = np.sum(wts * y) / wts.sum()
    sxx = np.sum(wts * (t - tb) ** 2)
    slope = np.sum(wts * (t - tb) * (y - yb)) / sxx
    return float(slope), float(1.0 / math.sqrt(sxx)) if stderrs is not None else float("nan")
