"""
Tail modeling of the combined gain.

The combined gain of M i.i.d. Rayleigh antennas with unit mean is
Gamma(M, 1/M). This module compares empirical CDFs against that reference,
fits gamma shape and scale (the shape reads as effective degrees of
freedom) and computes fading margins:

    margin(p) = 10*log10(Q(0.5) / Q(p))

where Q is the quantile function of the combined gain.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, special

from mimo.hardening.computation import combined_gain, subset_tensors
from mimo.hardening.config import get_config
from mimo.hardening.core import ChannelTensor, SubsetPolicy
from mimo.hardening.validation import (
    ConfigError,
    DataError,
    InsufficientSamplesError,
    ZeroPowerError,
    validate_probability,
)

logger = logging.getLogger(__name__)

FIT_METHODS = ("mle", "mom")
SCALE_MODES = ("joint", "constrained")
OFFSET_UNITS = ("db", "linear")


# =============================================================================
# EMPIRICAL CDF
# =============================================================================

@dataclass(frozen=True)
class Ecdf:
    """Sorted samples with Hazen plotting positions (i - 0.5) / n."""
    values: np.ndarray
    count: int
    method: str = "hazen"

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(1, self.count + 1) - 0.5) / self.count


def ecdf(samples) -> Ecdf:
    """
    Build an empirical CDF.

    Raises:
        InsufficientSamplesError: If samples are empty
        DataError: If any sample is NaN or Inf
    """
    values = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    if values.size == 0:
        raise InsufficientSamplesError("cannot build an ECDF from no samples")
    if not np.all(np.isfinite(values)):
        raise DataError("ECDF samples contain NaN or Inf")
    values.flags["WRITEABLE"] = False
    return Ecdf(values=values, count=int(values.size), method=get_config().tails.quantile_method)


def quantile(dist: Ecdf, p: float) -> float:
    """
    Empirical p-quantile by linear interpolation between plotting positions.

    Below the first position returns the minimum sample, above the last the
    maximum; is_reliable() reports both cases as unreliable.
    """
    validate_probability(p)
    return float(np.interp(p, dist.positions, dist.values))


def is_reliable(dist: Ecdf, p: float) -> bool:
    """
    Whether the sample count supports a p-quantile.

    Needs count >= sufficiency_factor / p, and p inside the plotting
    positions.
    """
    factor = get_config().tails.sufficiency_factor
    tail = min(p, 1.0 - p)
    return dist.count >= factor / tail and tail >= 0.5 / dist.count


def ecdf_table(dist: Ecdf, points: Optional[int] = None) -> List[Dict[str, float]]:
    """
    (value, probability) rows for plotting, thinned log-uniformly in rank so
    the lower tail keeps its resolution.
    """
    points = points or get_config().tails.ecdf_export_points
    if dist.count <= points:
        idx = np.arange(dist.count)
    else:
        idx = np.unique(np.geomspace(1, dist.count, points).astype(int) - 1)
    positions = dist.positions
    return [{"value": float(dist.values[i]), "probability": float(positions[i])} for i in idx]


# =============================================================================
# GAMMA REFERENCE
# =============================================================================

def _check_shape(shape: float) -> None:
    if not shape > 0 or not np.isfinite(shape):
        raise ConfigError(f"gamma shape must be positive and finite, got {shape}")


def gamma_reference_cdf(shape: float, x):
    """
    CDF of Gamma(shape, 1/shape): the regularized lower incomplete gamma
    P(shape, shape * x).
    """
    _check_shape(shape)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ConfigError("gamma CDF argument must be >= 0")
    result = special.gammainc(shape, shape * x)
    return float(result) if result.ndim == 0 else result


def gamma_quantile(shape: float, p: float) -> float:
    """Inverse of gamma_reference_cdf at probability p in (0, 1)."""
    _check_shape(shape)
    validate_probability(p)
    return float(special.gammaincinv(shape, p) / shape)


# =============================================================================
# GAMMA FIT
# =============================================================================

@dataclass(frozen=True)
class GammaFit:
    """Estimated gamma shape and scale."""
    shape: float
    scale: float
    method: str
    sample_count: int
    scale_mode: str = "joint"


def _solve_shape(s: float, tolerance: float, max_iterations: int) -> float:
    """
    Root of ln(a) - digamma(a) = s for s > 0.

    Newton from the Minka starting value. The left side falls monotonically
    from +inf to 0, so if Newton leaves a > 0 or stalls the root is bracketed
    and refined with Brent's method instead.
    """
    def f(a):
        return np.log(a) - special.digamma(a) - s

    def fprime(a):
        return 1.0 / a - special.polygamma(1, a)

    start = (3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    with np.errstate(invalid="ignore", divide="ignore"):
        root, result = optimize.newton(
            f, start, fprime=fprime, tol=np.finfo(float).tiny, rtol=tolerance,
            maxiter=max_iterations, full_output=True, disp=False,
        )
    if result.converged and np.isfinite(root) and root > 0:
        return float(root)

    lo, hi = 0.5 * start, 2.0 * start
    while f(lo) < 0:
        lo *= 0.5
    while f(hi) > 0:
        hi *= 2.0
    root, result = optimize.brentq(
        f, lo, hi,
        xtol=tolerance * lo,
        rtol=max(tolerance, 4 * np.finfo(float).eps),
        maxiter=max_iterations,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        logger.warning("gamma shape solver stopped after %d iterations at a=%.6g", max_iterations, root)
    return float(root)


def fit_gamma(
    samples,
    method: Optional[str] = None,
    scale_mode: Optional[str] = None,
) -> GammaFit:
    """
    Fit a gamma distribution to positive samples.

    joint:       free shape and scale. MoM uses shape = mean^2/var; MLE
                 solves ln(a) - digamma(a) = ln(mean) - mean(ln x).
    constrained: scale fixed to 1/shape (unit mean). MoM uses shape = 1/var;
                 MLE solves ln(a) - digamma(a) = mean(x) - 1 - mean(ln x).

    Raises:
        InsufficientSamplesError: If fewer than 100 samples
        DataError: If a sample is not positive or the variance is zero
    """
    defaults = get_config().tails
    method = method or defaults.fit_method
    scale_mode = scale_mode or defaults.scale_mode
    if method not in FIT_METHODS:
        raise ConfigError(f"fit method must be one of {FIT_METHODS}, got {method!r}")
    if scale_mode not in SCALE_MODES:
        raise ConfigError(f"scale mode must be one of {SCALE_MODES}, got {scale_mode!r}")

    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size < 100:
        raise InsufficientSamplesError(f"gamma fit needs >= 100 samples, got {x.size}")
    if not np.all(x > 0):
        raise DataError("gamma fit needs strictly positive samples")
    mean = float(np.mean(x))
    var = float(np.var(x))
    if var == 0.0:
        raise DataError("gamma fit needs samples with non-zero variance")

    if method == "mom":
        shape = 1.0 / var if scale_mode == "constrained" else mean ** 2 / var
    else:
        mean_log = float(np.mean(np.log(x)))
        if scale_mode == "constrained":
            s = mean - 1.0 - mean_log
        else:
            s = float(np.log(mean)) - mean_log
        if not s > 0:
            raise DataError("degenerate samples for gamma maximum likelihood")
        shape = _solve_shape(s, defaults.mle_tolerance, defaults.mle_max_iterations)

    scale = 1.0 / shape if scale_mode == "constrained" else mean / shape
    return GammaFit(shape=shape, scale=scale, method=method, sample_count=int(x.size),
                    scale_mode=scale_mode)


@dataclass(frozen=True)
class DofPoint:
    """Gamma fit of the combined gain at one subset size."""
    subset_size: int
    fit: GammaFit
    alternate: GammaFit             # the other method, reported alongside


@dataclass(frozen=True)
class DofCurve:
    points: List[DofPoint]
    policy: SubsetPolicy

    def shape_slope(self) -> float:
        """Least-squares slope of fitted shape against subset size."""
        sizes = np.array([p.subset_size for p in self.points], dtype=float)
        shapes = np.array([p.fit.shape for p in self.points])
        return float(np.polyfit(sizes, shapes, 1)[0])

    def to_rows(self) -> List[Dict]:
        rows = []
        for p in self.points:
            for fit in (p.fit, p.alternate):
                rows.append({
                    "size": p.subset_size,
                    "shape": fit.shape,
                    "scale": fit.scale,
                    "method": fit.method,
                    "scale_mode": fit.scale_mode,
                })
        return rows


def dof_curve(
    tensor: ChannelTensor,
    policy: Optional[SubsetPolicy] = None,
    method: Optional[str] = None,
    scale_mode: Optional[str] = None,
) -> DofCurve:
    """Gamma fit of the combined gain for each subset size of a policy."""
    policy = policy or SubsetPolicy()
    method = method or get_config().tails.fit_method
    other = "mom" if method == "mle" else "mle"
    points = []
    for size, normalized in subset_tensors(tensor, policy):
        gain = combined_gain(normalized)
        fit = fit_gamma(gain, method, scale_mode)
        points.append(DofPoint(size, fit, fit_gamma(gain, other, scale_mode)))
        logger.debug("size %d: shape %.3f scale %.4f", size, fit.shape, fit.scale)
    return DofCurve(points=points, policy=policy)


# =============================================================================
# CDF OFFSET
# =============================================================================

@dataclass(frozen=True)
class CdfOffset:
    """Horizontal gap between reference and empirical CDF at probability p."""
    value: float
    p: float
    shape: float
    unit: str
    reliable: bool


def cdf_offset(dist: Ecdf, shape: float, p: float, unit: Optional[str] = None) -> CdfOffset:
    """
    Gap between the Gamma(shape, 1/shape) and empirical p-quantiles.

    In dB: 10*log10(reference / empirical), positive when the empirical tail
    is heavier. In linear units: reference - empirical.
    """
    unit = unit or get_config().tails.offset_unit
    if unit not in OFFSET_UNITS:
        raise ConfigError(f"offset unit must be one of {OFFSET_UNITS}, got {unit!r}")
    reference = gamma_quantile(shape, p)
    empirical = quantile(dist, p)
    reliable = is_reliable(dist, p)
    if not reliable:
        logger.warning("cdf offset at p=%g from %d samples is unreliable", p, dist.count)

    if unit == "linear":
        value = reference - empirical
    else:
        if empirical <= 0:
            raise ZeroPowerError(f"empirical quantile at p={p} is not positive")
        value = float(10.0 * np.log10(reference / empirical))
    return CdfOffset(value=value, p=p, shape=shape, unit=unit, reliable=reliable)


@dataclass(frozen=True)
class OffsetRange:
    """Spread of CDF offsets over subset sizes."""
    minimum: Optional[float]
    maximum: Optional[float]
    offsets: List[Tuple[int, CdfOffset]]
    skipped: int


def cdf_offset_range(
    tensor: ChannelTensor,
    policy: Optional[SubsetPolicy] = None,
    p: float = 1e-3,
    min_size: int = 3,
    unit: Optional[str] = None,
) -> OffsetRange:
    """
    CDF offsets against the i.i.d. reference for subset sizes >= min_size.

    Sizes whose offset is unreliable are skipped and counted.
    """
    policy = policy or SubsetPolicy()
    kept = tuple(s for s in policy.sizes if s >= min_size)
    if not kept:
        raise ConfigError(f"no subset size >= {min_size} in {list(policy.sizes)}")

    offsets, skipped = [], 0
    for size, normalized in subset_tensors(tensor, policy.with_sizes(kept)):
        offset = cdf_offset(ecdf(combined_gain(normalized)), float(size), p, unit)
        if offset.reliable:
            offsets.append((size, offset))
        else:
            skipped += 1

    values = [o.value for _, o in offsets]
    return OffsetRange(
        minimum=min(values) if values else None,
        maximum=max(values) if values else None,
        offsets=offsets,
        skipped=skipped,
    )


# =============================================================================
# FADING MARGIN
# =============================================================================

def fading_margin(source: Union[Ecdf, float], p: float) -> float:
    """
    Fading margin 10*log10(Q(0.5) / Q(p)) in dB.

    Args:
        source: An Ecdf (empirical) or a gamma shape (analytic Gamma(M, 1/M))
        p: Outage probability in (0, 0.5]

    Raises:
        ConfigError: If p is outside (0, 0.5]
        ZeroPowerError: If the p-quantile is zero
    """
    validate_probability(p, upper=0.5, include_upper=True)
    if isinstance(source, Ecdf):
        median, tail = quantile(source, 0.5), quantile(source, p)
    else:
        median, tail = gamma_quantile(float(source), 0.5), gamma_quantile(float(source), p)
    if tail <= 0:
        raise ZeroPowerError(f"quantile at p={p} is not positive")
    return float(10.0 * np.log10(median / tail))


@dataclass(frozen=True)
class MarginRow:
    subset_size: int
    p: float
    margin_db: float
    reliable: bool
    reference_margin_db: float      # analytic i.i.d. margin at the same size


@dataclass(frozen=True)
class FadingMarginTable:
    rows: List[MarginRow]

    @property
    def unreliable_count(self) -> int:
        return sum(1 for r in self.rows if not r.reliable)

    def to_rows(self) -> List[Dict]:
        return [
            {
                "size": r.subset_size,
                "p": r.p,
                "margin_db": r.margin_db,
                "reliable": r.reliable,
                "reference_margin_db": r.reference_margin_db,
            }
            for r in self.rows
        ]


def _p_list(p_list: Optional[Sequence[float]]) -> Tuple[float, ...]:
    ps = tuple(float(p) for p in (p_list or get_config().tails.p_list))
    for p in ps:
        validate_probability(p, upper=0.5, include_upper=True)
    return ps


def fading_margin_table(
    tensor: ChannelTensor,
    policy: Optional[SubsetPolicy] = None,
    p_list: Optional[Sequence[float]] = None,
) -> FadingMarginTable:
    """Empirical fading margin for every (subset size, p) pair."""
    policy = policy or SubsetPolicy()
    ps = _p_list(p_list)
    rows = []
    for size, normalized in subset_tensors(tensor, policy):
        dist = ecdf(combined_gain(normalized))
        for p in ps:
            rows.append(MarginRow(
                subset_size=size,
                p=p,
                margin_db=fading_margin(dist, p),
                reliable=is_reliable(dist, p),
                reference_margin_db=fading_margin(float(size), p),
            ))
    table = FadingMarginTable(rows=rows)
    if table.unreliable_count:
        logger.warning("%d of %d margin rows lack samples for their p", table.unreliable_count, len(rows))
    return table


def iid_margin_table(sizes: Sequence[int], p_list: Optional[Sequence[float]] = None) -> FadingMarginTable:
    """Analytic i.i.d. margins, Gamma(M, 1/M) at each size."""
    ps = _p_list(p_list)
    rows = []
    for size in sizes:
        for p in ps:
            margin = fading_margin(float(size), p)
            rows.append(MarginRow(int(size), p, margin, True, margin))
    return FadingMarginTable(rows=rows)
