"""Two-sample distances, goodness-of-fit checks, and bootstrap utilities."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream

# sqrt(-ln(alpha/2)/2) for alpha = 0.01: asymptotic Kolmogorov-Smirnov
# critical coefficient at the 1% level
KS_COEFF_1PCT = math.sqrt(-math.log(0.005) / 2.0)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    n1: int
    n2: int
    reject_at_1pct: bool


def ks_two_sample(a, b) -> KsResult:
    """Sup-distance of the two empirical CDFs, asymptotic 1% rejection.

    Tolerates +inf entries (they simply pile up at the right end of the
    CDF), which is how padded nearest-neighbor distances are encoded.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be nonempty")
    if np.any(np.isnan(a)) or np.any(np.isnan(b)):
        raise ValueError("samples must not contain NaN")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / n1
    cdf_b = np.searchsorted(b, grid, side="right") / n2
    stat = float(np.max(np.abs(cdf_a - cdf_b)))
    thresh = KS_COEFF_1PCT * math.sqrt((n1 + n2) / (n1 * n2))
    return KsResult(stat, n1, n2, stat > thresh)


def ks_exponential_fit(samples, rate: float) -> KsResult:
    """One-sample KS statistic against the Exp(rate) distribution."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("samples must be nonempty")
    if np.any(x <= 0):
        raise ValueError("samples must be positive")
    cdf = 1.0 - np.exp(-rate * x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    stat = float(max(upper.max(), lower.max()))
    thresh = KS_COEFF_1PCT / math.sqrt(n)
    return KsResult(stat, n, 0, stat > thresh)


def bootstrap_ci(values, rng: RngStream, resamples: int = 1000, level: float = 0.95):
    """Percentile bootstrap interval for the mean, deterministic per stream."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise ValueError("need at least two values")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    gen = rng.generator()
    picks = gen.integers(0, len(values), size=(resamples, len(values)))
    means = values[picks].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def chi_square_uniform(counts) -> float:
    """P-value of Pearson's chi-square test for equal cell probabilities."""
    from scipy.stats import chisquare

    counts = np.asarray(counts, dtype=float)
    if counts.sum() <= 0:
        raise ValueError("counts must have positive total")
    return float(chisquare(counts).pvalue)
