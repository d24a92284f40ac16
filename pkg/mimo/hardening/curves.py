"""
Channel hardening: standard deviation of the MRC-combined gain versus the
number of base-station antennas, and the i.i.d. Rayleigh reference.

With unit mean gain, std_db = 10*log10(std_linear); an i.i.d. channel gives
std_linear = 1/sqrt(M), i.e. -10 dB at 100 antennas.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from mimo.hardening.computation import combined_gain, normalize, subset_tensors
from mimo.hardening.core import ChannelTensor, SubsetPolicy
from mimo.hardening.validation import (
    ConfigError,
    InsufficientSamplesError,
    ZeroPowerError,
    validate_sizes,
    validate_subset,
)

logger = logging.getLogger(__name__)


def _to_db(value: float) -> float:
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(value))


@dataclass(frozen=True)
class HardeningPoint:
    """Combined-gain spread at one subset size."""
    subset_size: int
    std_linear: float
    std_db: float
    iid_equivalent: float          # i.i.d. antenna count with the same spread

    @property
    def reference_std_db(self) -> float:
        return -5.0 * float(np.log10(self.subset_size))


@dataclass(frozen=True)
class HardeningCurve:
    """Hardening points in ascending subset size."""
    points: List[HardeningPoint]
    policy: SubsetPolicy

    @property
    def hardening_amount_db(self) -> float:
        """Drop in std_db from the smallest to the largest subset."""
        return self.points[0].std_db - self.points[-1].std_db

    @property
    def sizes(self) -> List[int]:
        return [p.subset_size for p in self.points]

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {
                "size": p.subset_size,
                "std_linear": p.std_linear,
                "std_db": p.std_db,
                "reference_std_db": p.reference_std_db,
                "iid_equivalent": p.iid_equivalent,
            }
            for p in self.points
        ]


def iid_equivalent_antennas(std_linear: float) -> float:
    """
    Number of i.i.d. antennas whose combined gain has this spread: 1/std^2.

    Raises:
        ConfigError: If std_linear is not positive
    """
    if not std_linear > 0:
        raise ConfigError(f"std_linear must be positive, got {std_linear}")
    return 1.0 / std_linear ** 2


def gain_std(tensor: ChannelTensor, subset: Optional[Sequence[int]] = None) -> float:
    """
    Standard deviation of the combined gain over all (n, f).

    Args:
        tensor: Tensor normalized over `subset`
        subset: Antenna ids of the normalization (None = as stored)

    Raises:
        SubsetMismatchError: If the tensor was normalized over another subset
        InsufficientSamplesError: If there are fewer than 2 (n, f) samples
    """
    gain = combined_gain(tensor, subset)
    if gain.size < 2:
        raise InsufficientSamplesError(f"need >= 2 (n, f) samples, got {gain.size}")
    return float(np.std(gain))


def _point(size: int, std_linear: float) -> HardeningPoint:
    return HardeningPoint(
        subset_size=size,
        std_linear=std_linear,
        std_db=_to_db(std_linear),
        iid_equivalent=iid_equivalent_antennas(std_linear) if std_linear > 0 else float("inf"),
    )


def hardening_curve(tensor: ChannelTensor, policy: Optional[SubsetPolicy] = None) -> HardeningCurve:
    """
    Combined-gain spread for every subset size of a policy.

    Each size is normalized over its own subset, so every point has unit
    mean gain.
    """
    policy = policy or SubsetPolicy()
    points = []
    for size, normalized in subset_tensors(tensor, policy):
        point = _point(size, gain_std(normalized))
        logger.debug("size %d: std %.3f dB", size, point.std_db)
        points.append(point)
    curve = HardeningCurve(points=points, policy=policy)
    logger.info("hardening amount %.2f dB over sizes %s", curve.hardening_amount_db, curve.sizes)
    return curve


def iid_reference_curve(sizes: Sequence[int]) -> HardeningCurve:
    """Analytic i.i.d. Rayleigh curve, std_linear = 1/sqrt(M)."""
    sizes = tuple(int(s) for s in sizes)
    validate_sizes(sizes)
    return HardeningCurve(
        points=[_point(m, 1.0 / np.sqrt(m)) for m in sizes],
        policy=SubsetPolicy(sizes=sizes),
    )


def array_gain_db(tensor: ChannelTensor, subset: Optional[Sequence[int]] = None) -> float:
    """
    Ratio of summed to per-antenna mean gain on raw coefficients, in dB.

    This is the array gain that normalization divides out; for any channel it
    equals 10*log10(|subset|).

    Raises:
        ZeroPowerError: If the subset carries no power
    """
    ids = validate_subset(tensor.antenna_ids if subset is None else subset, tensor.antenna_ids)
    column = {aid: pos for pos, aid in enumerate(tensor.antenna_ids)}
    power = tensor.power()[:, :, [column[i] for i in ids]]
    per_antenna = float(power.mean())
    if per_antenna == 0.0:
        raise ZeroPowerError("subset carries no power")
    return _to_db(float(power.sum(axis=2).mean()) / per_antenna)


@dataclass(frozen=True)
class PerAntennaStats:
    """Time-and-frequency averaged gain per antenna, in dB."""
    antenna_ids: List[int]
    mean_db: np.ndarray
    std_db: float                   # spread across antennas

    def to_rows(self) -> List[Dict[str, float]]:
        return [{"antenna": a, "mean_db": float(g)} for a, g in zip(self.antenna_ids, self.mean_db)]


def per_antenna_mean_stats(tensor: ChannelTensor) -> PerAntennaStats:
    """
    Mean gain of each antenna over (n, f) and its spread across antennas.

    A tensor that is not yet normalized is normalized over all of its
    antennas first.

    Raises:
        InsufficientSamplesError: If there are fewer than 2 antennas
    """
    if tensor.n_ant < 2:
        raise InsufficientSamplesError("cross-antenna spread needs >= 2 antennas")
    if not tensor.normalized:
        tensor = normalize(tensor)
    with np.errstate(divide="ignore"):
        mean_db = 10.0 * np.log10(tensor.power().mean(axis=(0, 1)))
    return PerAntennaStats(
        antenna_ids=list(tensor.antenna_ids),
        mean_db=mean_db,
        std_db=float(np.std(mean_db, ddof=1)),
    )
