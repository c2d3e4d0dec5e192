"""Heavy-tail diagnostics for samples of |R|.

In two dimensions a radial density g(rho) ~ rho^(-p) has survival function
P(|R| > rho) ~ rho^(2 - p). Everything here estimates the survival exponent
q = p - 2; ``density_exponent`` converts back. Keep that conversion here.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .shell_noise import InvalidParameterError

DIMENSION = 2
DEFAULT_FRACTION = 0.01
SWEEP_FRACTIONS = (0.005, 0.01, 0.02)
MIN_SAMPLES = 1000
MIN_ORDER_STATS = 50


def density_exponent(q: float) -> float:
    return q + DIMENSION


def survival_exponent(p: float) -> float:
    return p - DIMENSION


@dataclass(frozen=True)
class TailFit:
    q_hat: float  # survival exponent
    p_hat: float  # density exponent
    k_fraction: float
    k: int
    threshold: float  # the (k+1)-th largest sample
    half_width: float  # asymptotic 95% half-width, 1.96 q / sqrt(k)

    def to_dict(self) -> dict:
        return asdict(self)


def hill_fit(samples, k_fraction: float = DEFAULT_FRACTION) -> TailFit:
    """Hill estimator of the survival exponent from the top k order statistics.

    q_hat = k / sum_{i<k} log(X_(i) / X_(k)) with X_(0) >= X_(1) >= ...
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if not 0 < k_fraction <= 0.2:
        raise InvalidParameterError("k_fraction must lie in (0, 0.2]")
    if n < MIN_SAMPLES:
        raise InvalidParameterError(f"need at least {MIN_SAMPLES} samples, got {n}")
    k = int(math.floor(k_fraction * n))
    if k < MIN_ORDER_STATS:
        raise InvalidParameterError(f"k_fraction * n = {k} < {MIN_ORDER_STATS} order statistics")
    if x[0] <= 0 or not np.all(np.isfinite(x)):
        raise InvalidParameterError("samples must be finite and > 0")
    top = x[n - k :]
    threshold = x[n - k - 1]
    total = math.fsum(np.log(top / threshold))
    q = k / total
    return TailFit(q, density_exponent(q), float(k_fraction), k, float(threshold), 1.96 * q / math.sqrt(k))


def hill_sweep(samples, fractions=SWEEP_FRACTIONS) -> list[TailFit]:
    """Hill fits at several tail fractions, for side-by-side reporting."""
    return [hill_fit(samples, f) for f in fractions]


def ccdf(samples, levels=None, n_levels: int = 64):
    """Empirical survival P(X > level) at log-spaced levels.

    Returns ``(levels, survival)``. Counts are exact; the function is
    right-continuous, so a level equal to a sample does not count it.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise InvalidParameterError("ccdf needs at least one sample")
    if levels is None:
        lo, hi = x[0], x[-1]
        if lo > 0 and hi > lo:
            levels = np.geomspace(lo, hi, n_levels)
        else:
            levels = np.linspace(lo, hi, n_levels) if hi > lo else np.array([lo])
    levels = np.asarray(levels, dtype=float)
    survival = (x.size - np.searchsorted(x, levels, side="right")) / x.size
    return levels, survival


def ccdf_slope(samples, lo_quantile: float = 0.9, hi_quantile: float = 0.999, n_levels: int = 32) -> float:
    """Least-squares slope of log survival against log level between two quantiles."""
    x = np.asarray(samples, dtype=float)
    lo, hi = np.quantile(x, [lo_quantile, hi_quantile])
    levels, surv = ccdf(x, np.geomspace(lo, hi, n_levels))
    keep = surv > 0
    slope, _ = np.polyfit(np.log(levels[keep]), np.log(surv[keep]), 1)
    return float(slope)


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    return float(stats.ks_2samp(np.asarray(a), np.asarray(b)).statistic)


def ks_floor(n: int, m: int, alpha: float = 0.05) -> float:
    """Large-sample critical value c(alpha) sqrt((n + m)/(n m)) of the two-sample KS test."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))
