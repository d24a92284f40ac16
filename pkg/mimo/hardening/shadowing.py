"""
Large-scale fading: the aggregate dB gain series, its linear trend and the
log-normal fit of what remains.

Uses raw (un-normalized) coefficients, so intercepts are absolute levels.
The regression abscissa is the time-sample index.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from mimo.hardening.config import get_config
from mimo.hardening.core import ChannelTensor
from mimo.hardening.tails import ecdf, quantile
from mimo.hardening.validation import (
    ConfigError,
    DataError,
    InsufficientSamplesError,
    ZeroPowerError,
    validate_probability,
)

logger = logging.getLogger(__name__)


def large_scale_series(tensor: ChannelTensor) -> np.ndarray:
    """
    Antenna-summed, frequency-averaged gain per time sample:

        g(n) = 10*log10( (1/F) * sum_f sum_m |h(n, f, m)|^2 )

    Raises:
        DataError: If the tensor still carries flagged lost samples
        ZeroPowerError: If a time sample has zero power
    """
    if tensor.has_unhandled_losses:
        raise DataError("tensor has flagged lost samples; interpolate or drop them first")
    gain = tensor.power().sum(axis=2).mean(axis=1)
    if np.any(gain <= 0):
        raise ZeroPowerError(f"zero-power time samples at n={np.flatnonzero(gain <= 0)[:5].tolist()}")
    return 10.0 * np.log10(gain)


@dataclass(frozen=True)
class LinearTrend:
    """Least-squares line y = slope * x + intercept and its residuals."""
    slope: float
    intercept: float
    residuals: np.ndarray
    slope_stderr: float
    intercept_stderr: float


def detrend_linear(series, abscissa=None) -> LinearTrend:
    """
    Ordinary least squares fit of a series against its sample index.

    Args:
        series: dB values
        abscissa: x values (default 0..len-1); pass the original time
            indices when samples were dropped

    Raises:
        InsufficientSamplesError: If fewer than 3 points
        ConfigError: If the abscissa is constant or of the wrong length
    """
    y = np.asarray(series, dtype=float).reshape(-1)
    if y.size < 3:
        raise InsufficientSamplesError(f"linear detrend needs >= 3 points, got {y.size}")
    x = np.arange(y.size, dtype=float) if abscissa is None else np.asarray(abscissa, dtype=float)
    if x.shape != y.shape:
        raise ConfigError(f"abscissa length {x.size} != series length {y.size}")
    if np.ptp(x) == 0:
        raise ConfigError("abscissa is constant")

    fit = stats.linregress(x, y)
    residuals = y - (fit.slope * x + fit.intercept)
    return LinearTrend(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        residuals=residuals,
        slope_stderr=float(fit.stderr),
        intercept_stderr=float(fit.intercept_stderr),
    )


def fit_lognormal(residuals) -> Tuple[float, float]:
    """
    Normal fit of dB residuals: sample mean and (n-1) standard deviation.

    Raises:
        InsufficientSamplesError: If there are fewer residuals than configured
    """
    r = np.asarray(residuals, dtype=float).reshape(-1)
    minimum = get_config().shadowing.min_residuals
    if r.size < minimum:
        raise InsufficientSamplesError(f"normal fit needs >= {minimum} residuals, got {r.size}")
    return float(np.mean(r)), float(np.std(r, ddof=1))


def shadowing_span(residuals) -> Tuple[float, float]:
    """Smallest and largest residual."""
    r = np.asarray(residuals, dtype=float).reshape(-1)
    if r.size == 0:
        raise InsufficientSamplesError("no residuals")
    return float(r.min()), float(r.max())


def residual_cdf(residuals, mu: Optional[float] = None, sigma: Optional[float] = None) -> List[Dict[str, float]]:
    """
    Empirical residual CDF next to the fitted normal CDF, one row per
    residual in ascending order.
    """
    if mu is None or sigma is None:
        mu, sigma = fit_lognormal(residuals)
    dist = ecdf(residuals)
    normal = stats.norm.cdf(dist.values, loc=mu, scale=sigma) if sigma > 0 else (dist.values >= mu).astype(float)
    return [
        {"residual_db": float(v), "ecdf": float(p), "normal_cdf": float(c)}
        for v, p, c in zip(dist.values, dist.positions, normal)
    ]


def normal_tail_excess(
    residuals,
    p: float = 1e-3,
    mu: Optional[float] = None,
    sigma: Optional[float] = None,
) -> Tuple[float, float]:
    """
    How far the fitted normal overshoots the empirical tails, in dB.

    Returns (lower, upper): empirical minus normal p-quantile, and normal
    minus empirical (1-p)-quantile. Positive values mean the normal fit
    overestimates that tail.
    """
    validate_probability(p, upper=0.5)
    if mu is None or sigma is None:
        mu, sigma = fit_lognormal(residuals)
    dist = ecdf(residuals)
    lower = quantile(dist, p) - stats.norm.ppf(p, loc=mu, scale=sigma)
    upper = stats.norm.ppf(1.0 - p, loc=mu, scale=sigma) - quantile(dist, 1.0 - p)
    return float(lower), float(upper)


def gain_level_stats(series_db) -> Tuple[float, float]:
    """
    Mean and (n-1) standard deviation of a dB gain series.

    Raises:
        InsufficientSamplesError: If fewer than 2 points
    """
    g = np.asarray(series_db, dtype=float).reshape(-1)
    if g.size < 2:
        raise InsufficientSamplesError(f"level statistics need >= 2 points, got {g.size}")
    return float(np.mean(g)), float(np.std(g, ddof=1))


def trim_count(tensor: ChannelTensor, seconds: Optional[float] = None) -> int:
    """
    Number of leading time samples covering `seconds` of a recording.

    Raises:
        ConfigError: If seconds is negative
        InsufficientSamplesError: If nothing would remain
    """
    seconds = get_config().shadowing.level_trim_seconds if seconds is None else seconds
    if seconds < 0:
        raise ConfigError(f"trim must be >= 0 s, got {seconds}")
    count = int(round(seconds * tensor.rep_rate_hz))
    if count >= tensor.n_time:
        raise InsufficientSamplesError(
            f"trimming {count} samples leaves nothing of N={tensor.n_time}"
        )
    return count


def trim_leading(tensor: ChannelTensor, seconds: Optional[float] = None) -> ChannelTensor:
    """
    Drop the first `seconds` of a recording. The result is indexed from 0;
    trim_count() gives the offset back to the original time index.
    """
    count = trim_count(tensor, seconds)
    if count == 0:
        return tensor
    lost = None if tensor.lost_mask is None else tensor.lost_mask[count:]
    return tensor.replace(data=tensor.data[count:], lost_mask=lost)


@dataclass(frozen=True)
class ShadowingFit:
    """Trend and log-normal shadowing estimated from one recording."""
    slope_k: float
    intercept_m: float
    residuals: np.ndarray
    sigma_hat: float
    mu_hat: float
    span: Tuple[float, float]
    slope_stderr: float
    intercept_stderr: float
    time_index: np.ndarray
    series_db: np.ndarray

    def to_rows(self) -> List[Dict[str, float]]:
        trend = self.slope_k * self.time_index + self.intercept_m
        return [
            {"n": int(n), "g_db": float(g), "trend_db": float(t), "residual_db": float(r)}
            for n, g, t, r in zip(self.time_index, self.series_db, trend, self.residuals)
        ]

    def summary(self) -> Dict[str, float]:
        return {
            "slope_k": self.slope_k,
            "slope_stderr": self.slope_stderr,
            "intercept_m": self.intercept_m,
            "intercept_stderr": self.intercept_stderr,
            "mu_hat": self.mu_hat,
            "sigma_hat": self.sigma_hat,
            "span_min_db": self.span[0],
            "span_max_db": self.span[1],
            "samples": int(self.time_index.size),
        }


def fit_shadowing(
    tensor: ChannelTensor,
    time_index=None,
    from_sample: Optional[int] = None,
) -> ShadowingFit:
    """
    Aggregate series, linear trend and log-normal fit in one pass.

    Args:
        tensor: Raw tensor with lost samples handled
        time_index: Original time index of each sample (default 0..N-1);
            keeps the slope in per-sample units after drop_lost
        from_sample: Ignore samples whose time index is below this
    """
    from_sample = get_config().shadowing.from_sample if from_sample is None else from_sample
    series = large_scale_series(tensor)
    index = np.arange(series.size) if time_index is None else np.asarray(time_index)
    if index.size != series.size:
        raise ConfigError(f"time_index length {index.size} != N={series.size}")

    keep = index >= from_sample
    series, index = series[keep], index[keep]
    trend = detrend_linear(series, index)
    mu, sigma = fit_lognormal(trend.residuals)
    fit = ShadowingFit(
        slope_k=trend.slope,
        intercept_m=trend.intercept,
        residuals=trend.residuals,
        sigma_hat=sigma,
        mu_hat=mu,
        span=shadowing_span(trend.residuals),
        slope_stderr=trend.slope_stderr,
        intercept_stderr=trend.intercept_stderr,
        time_index=index,
        series_db=series,
    )
    logger.info("shadowing: k=%.5f dB/sample, m=%.2f dB, sigma=%.2f dB",
                fit.slope_k, fit.intercept_m, fit.sigma_hat)
    return fit
