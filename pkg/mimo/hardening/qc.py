"""
Data conditioning: lost-sample detection and repair, time autocorrelation
and the sampling-rate (maximum UE speed) check.

Statistics pipelines drop lost samples; time-series displays interpolate
them.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from mimo.hardening.config import get_config
from mimo.hardening.core import ChannelTensor
from mimo.hardening.validation import (
    AllMaskedError,
    ConfigError,
    validate_window,
)

logger = logging.getLogger(__name__)


def _as_mask(tensor: ChannelTensor, mask) -> np.ndarray:
    m = np.asarray(mask, dtype=bool).reshape(-1)
    if m.size != tensor.n_time:
        raise ConfigError(f"mask length {m.size} != N={tensor.n_time}")
    return m


def aggregate_gain_db(tensor: ChannelTensor) -> np.ndarray:
    """Antenna-summed, frequency-averaged gain per time sample, in dB."""
    gain = tensor.power().sum(axis=2).mean(axis=1)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(gain)


# =============================================================================
# LOST SAMPLES
# =============================================================================

def detect_lost_samples(
    tensor: ChannelTensor,
    threshold_db: Optional[float] = None,
    window: Optional[int] = None,
) -> np.ndarray:
    """
    Flag time samples whose aggregate gain dips below the local level.

    Index n is flagged when its aggregate gain in dB is more than
    threshold_db below the median of the window centred on n. Flagged
    samples are left out of later medians and the pass repeats until no new
    sample is flagged, so the neighbours of a long burst do not hide it.

    Args:
        tensor: Raw or normalized tensor (detection is scale-invariant)
        threshold_db: Dip depth that counts as lost (config default 15 dB)
        window: Odd median window length >= 3 (config default 21)

    Returns:
        Boolean mask over n

    Raises:
        ConfigError: If window is even, < 3, or not shorter than N
    """
    defaults = get_config().qc
    threshold_db = defaults.threshold_db if threshold_db is None else threshold_db
    window = defaults.window if window is None else window
    validate_window(window)
    if tensor.n_time <= window:
        raise ConfigError(f"need N > window, got N={tensor.n_time}, window={window}")

    g_db = aggregate_gain_db(tensor)
    half = window // 2
    mask = ~np.isfinite(g_db)

    for _ in range(defaults.max_detection_passes):
        level = np.where(mask, np.nan, g_db)
        padded = np.pad(level, half, constant_values=np.nan)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=RuntimeWarning)
            local = np.nanmedian(sliding_window_view(padded, window), axis=1)
        with np.errstate(invalid="ignore"):
            new_mask = mask | (g_db < local - threshold_db)
        if np.array_equal(new_mask, mask):
            break
        mask = new_mask

    logger.info("detected %d lost samples of %d", int(mask.sum()), tensor.n_time)
    return mask


def burst_histogram(mask: np.ndarray) -> Dict[int, int]:
    """Count runs of consecutive flagged samples by run length."""
    m = np.asarray(mask, dtype=np.int8)
    edges = np.diff(np.concatenate(([0], m, [0])))
    lengths = np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)
    values, counts = np.unique(lengths, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def interpolate_lost(tensor: ChannelTensor, mask) -> ChannelTensor:
    """
    Replace flagged samples by linear interpolation in time.

    Real and imaginary parts are interpolated independently per (f, m)
    between the nearest unflagged neighbours; runs at either end take the
    nearest unflagged value.

    Raises:
        AllMaskedError: If every sample is flagged
    """
    m = _as_mask(tensor, mask)
    if m.all():
        raise AllMaskedError("every time sample is flagged as lost")
    if not m.any():
        return tensor.replace(lost_mask=None)

    good = np.flatnonzero(~m)
    lost = np.flatnonzero(m)
    pos = np.searchsorted(good, lost)
    left = good[np.clip(pos - 1, 0, good.size - 1)]
    right = good[np.clip(pos, 0, good.size - 1)]

    span = (right - left).astype(float)
    weight = np.divide(lost - left, span, out=np.zeros_like(span), where=span > 0)
    # Boundary runs: left == right is the nearest unflagged sample
    weight = np.clip(weight, 0.0, 1.0)[:, None, None]

    data = np.array(tensor.data)
    data[lost] = (1.0 - weight) * data[left] + weight * data[right]
    logger.debug("interpolated %d lost samples", lost.size)
    return tensor.replace(data=data, lost_mask=None)


def drop_lost(tensor: ChannelTensor, mask) -> ChannelTensor:
    """
    Remove flagged time samples.

    Raises:
        AllMaskedError: If every sample is flagged
    """
    m = _as_mask(tensor, mask)
    if m.all():
        raise AllMaskedError("every time sample is flagged as lost")
    if not m.any():
        return tensor.replace(lost_mask=None)
    return tensor.replace(data=tensor.data[~m], lost_mask=None)


# =============================================================================
# TIME CORRELATION
# =============================================================================

@dataclass(frozen=True)
class AutocorrResult:
    """
    Autocorrelation magnitude per lag and (f, m).

    `magnitude[lag, f, m]` for lag 0..max_lag; lag 0 is exactly 1.
    """
    magnitude: np.ndarray
    max_lag: int
    limit: float
    envelope: bool

    def first_lag_below(self) -> np.ndarray:
        """
        Smallest lag >= 1 with magnitude below the limit, per (f, m).

        Pairs that never drop below the limit report max_lag + 1.
        """
        below = self.magnitude[1:] < self.limit
        first = np.argmax(below, axis=0) + 1
        return np.where(below.any(axis=0), first, self.max_lag + 1)

    @property
    def summary(self) -> int:
        """Largest decorrelation lag over all (f, m)."""
        return int(self.first_lag_below().max())

    def mean_curve(self) -> np.ndarray:
        """Magnitude per lag averaged over (f, m)."""
        return self.magnitude.mean(axis=(1, 2))


def _complex_autocorr(x: np.ndarray, max_lag: int) -> np.ndarray:
    """|sum x[n+l] x*[n]| over the overlap, normalized by the overlap energies."""
    n = x.shape[0]
    spectrum = np.fft.fft(x, n=2 * n, axis=0)
    raw = np.fft.ifft(spectrum * np.conj(spectrum), axis=0)[: max_lag + 1]

    energy = np.abs(x) ** 2
    cum = np.concatenate([np.zeros((1,) + x.shape[1:]), np.cumsum(energy, axis=0)])
    lags = np.arange(max_lag + 1)
    head = cum[n - lags]                  # energy of x[0 : n-l]
    tail = cum[n] - cum[lags]             # energy of x[l : n]
    denom = np.sqrt(head * tail)
    out = np.divide(np.abs(raw), denom, out=np.zeros_like(denom), where=denom > 0)
    return np.minimum(out, 1.0)


def _envelope_autocorr(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Pearson correlation of |x[n+l]| and |x[n]| over the overlap."""
    env = np.abs(x)
    n = env.shape[0]
    out = np.empty((max_lag + 1,) + env.shape[1:])
    for lag in range(max_lag + 1):
        a = env[: n - lag]
        b = env[lag:]
        a = a - a.mean(axis=0)
        b = b - b.mean(axis=0)
        denom = np.sqrt((a ** 2).sum(axis=0) * (b ** 2).sum(axis=0))
        # A constant envelope is perfectly correlated with itself
        out[lag] = np.divide(np.abs((a * b).sum(axis=0)), denom,
                             out=np.ones_like(denom), where=denom > 0)
    return np.minimum(out, 1.0)


def time_autocorrelation(
    tensor: ChannelTensor,
    max_lag: int,
    envelope: Optional[bool] = None,
    limit: Optional[float] = None,
) -> AutocorrResult:
    """
    Normalized time autocorrelation magnitude per (f, m).

    The complex form uses no mean removal, so a constant series correlates
    to 1 at every lag. envelope=True correlates |h| instead.

    Raises:
        ConfigError: If max_lag < 1 or max_lag >= N/2
    """
    defaults = get_config().qc
    envelope = defaults.envelope_correlation if envelope is None else envelope
    limit = defaults.correlation_limit if limit is None else limit
    if max_lag < 1 or 2 * max_lag >= tensor.n_time:
        raise ConfigError(f"max_lag must be in [1, N/2), got {max_lag} for N={tensor.n_time}")

    kernel = _envelope_autocorr if envelope else _complex_autocorr
    magnitude = np.empty((max_lag + 1, tensor.n_freq, tensor.n_ant))
    # One frequency point at a time keeps the FFT buffers at N x M
    for f in range(tensor.n_freq):
        magnitude[:, f, :] = kernel(tensor.data[:, f, :], max_lag)
    magnitude[0] = 1.0

    return AutocorrResult(magnitude=magnitude, max_lag=max_lag, limit=limit, envelope=envelope)


def max_ue_speed(rep_rate_hz: float, carrier_freq_hz: float) -> float:
    """
    Fastest UE speed the snapshot rate resolves without Doppler aliasing.

        v_max = c * (rep_rate / 2) / carrier_freq

    Raises:
        ConfigError: If either frequency is not positive
    """
    if rep_rate_hz <= 0 or carrier_freq_hz <= 0:
        raise ConfigError(
            f"frequencies must be positive, got rep_rate={rep_rate_hz}, carrier={carrier_freq_hz}"
        )
    return get_config().speed_of_light * rep_rate_hz / (2.0 * carrier_freq_hz)


# =============================================================================
# REPORT
# =============================================================================

@dataclass
class QcReport:
    """Outcome of a data-conditioning pass over one tensor."""
    lost_indices: List[int]
    burst_histogram: Dict[int, int]
    autocorr_lags: np.ndarray          # (F, M) first lag below the limit
    autocorr_summary: int
    max_ue_speed_mps: float
    nyquist_ok: Optional[bool]
    n_time: int
    threshold_db: float
    window: int
    envelope: bool
    ue_speed_mps: Optional[float] = None
    coherence_time_s: float = field(init=False)
    rep_rate_hz: float = 100.0

    def __post_init__(self) -> None:
        self.coherence_time_s = self.autocorr_summary / self.rep_rate_hz

    def to_dict(self) -> Dict:
        return {
            "n_time": self.n_time,
            "lost_count": len(self.lost_indices),
            "lost_indices": list(self.lost_indices),
            "burst_histogram": dict(self.burst_histogram),
            "threshold_db": self.threshold_db,
            "window": self.window,
            "autocorrelation": "envelope" if self.envelope else "complex",
            "decorrelation_lag": self.autocorr_summary,
            "coherence_time_s": self.coherence_time_s,
            "max_ue_speed_mps": self.max_ue_speed_mps,
            "ue_speed_mps": self.ue_speed_mps,
            "nyquist_ok": self.nyquist_ok,
        }


def qc_report(
    tensor: ChannelTensor,
    max_lag: int = 10,
    threshold_db: Optional[float] = None,
    window: Optional[int] = None,
    envelope: Optional[bool] = None,
    ue_speed_mps: Optional[float] = None,
) -> QcReport:
    """
    Detect lost samples, measure time correlation on the repaired tensor
    and check the snapshot rate against an optional declared UE speed.
    """
    defaults = get_config().qc
    threshold_db = defaults.threshold_db if threshold_db is None else threshold_db
    window = defaults.window if window is None else window
    envelope = defaults.envelope_correlation if envelope is None else envelope

    mask = detect_lost_samples(tensor, threshold_db, window)
    repaired = interpolate_lost(tensor, mask)
    autocorr = time_autocorrelation(repaired, max_lag, envelope=envelope)
    v_max = max_ue_speed(tensor.rep_rate_hz, tensor.carrier_freq_hz)

    nyquist_ok = None if ue_speed_mps is None else bool(ue_speed_mps <= v_max)
    if nyquist_ok is False:
        logger.warning("declared UE speed %.2f m/s exceeds %.2f m/s", ue_speed_mps, v_max)

    return QcReport(
        lost_indices=[int(i) for i in np.flatnonzero(mask)],
        burst_histogram=burst_histogram(mask),
        autocorr_lags=autocorr.first_lag_below(),
        autocorr_summary=autocorr.summary,
        max_ue_speed_mps=v_max,
        nyquist_ok=nyquist_ok,
        n_time=tensor.n_time,
        threshold_db=threshold_db,
        window=window,
        envelope=envelope,
        ue_speed_mps=ue_speed_mps,
        rep_rate_hz=tensor.rep_rate_hz,
    )
