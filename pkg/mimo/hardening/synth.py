"""
Synthetic channel generation with known ground truth.

Generators are pure functions of a SynthConfig and its seed. Each model
component draws from its own stream derived from the seed, so turning one
component on or off never shifts the random numbers of another.
"""

import logging
from typing import Any, Dict, Literal, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mimo.hardening.config import get_config
from mimo.hardening.core import (
    ArrayKind,
    ChannelTensor,
    UeOrientation,
    co_located_layout,
    default_layout,
    distributed_layout,
)
from mimo.hardening.validation import ConfigError, validate_burst_distribution

logger = logging.getLogger(__name__)

# Stream ids for seed derivation, one per model component
_STREAMS = {
    "small_scale": 1,
    "los_phase": 2,
    "shadowing": 3,
    "antenna_offsets": 4,
    "lost_samples": 5,
    "layout": 6,
}


# =============================================================================
# CONFIGURATION MODELS
# =============================================================================

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class IidModel(_Strict):
    """Independent CN(0, 1) coefficients."""
    kind: Literal["iid"] = "iid"


class CorrelatedModel(_Strict):
    """
    Exponential spatial correlation, AR(1) time correlation and an
    equal-power tapped delay line for frequency correlation.

    n_delay_taps=None means one tap per frequency point (no frequency
    correlation).
    """
    kind: Literal["correlated"] = "correlated"
    spatial_rho: float = Field(0.0, ge=0.0, lt=1.0)
    temporal_rho: float = Field(0.0, ge=0.0, lt=1.0)
    n_delay_taps: Optional[int] = Field(None, ge=1)


class RicianModel(_Strict):
    """A fixed per-antenna line-of-sight phasor plus CN(0, 1) scattering."""
    kind: Literal["rician"] = "rician"
    k_factor: float = Field(ge=0.0)


class TrendProfile(_Strict):
    """
    Large-scale overlay on the aggregate gain, in dB.

    The aggregate gain follows slope_k * n + intercept_m plus smoothed
    Gaussian shadowing; each antenna also gets a constant offset.
    """
    slope_k: float = 0.0
    intercept_m: float = 0.0
    shadow_sigma: float = Field(0.0, ge=0.0)
    shadow_coherence: int = Field(1, ge=1)
    per_antenna_offset_sigma: float = Field(0.0, ge=0.0)


class LostSampleProfile(_Strict):
    """Attenuation bursts that mimic failed over-the-air synchronization."""
    rate: float = Field(ge=0.0, le=0.1)
    depth_db: float = Field(25.0, ge=10.0)
    burst_distribution: Optional[Dict[int, float]] = None


class SynthConfig(_Strict):
    """Full description of one synthetic channel tensor."""
    n_time: int = Field(ge=1)
    n_freq: int = Field(ge=1)
    n_ant: int = Field(ge=1)
    model: Union[IidModel, CorrelatedModel, RicianModel] = Field(
        default_factory=IidModel, discriminator="kind"
    )
    large_scale: Optional[TrendProfile] = None
    lost_samples: Optional[LostSampleProfile] = None
    seed: int
    array: Literal["co-located", "distributed"] = "co-located"
    ue_orientation: UeOrientation = UeOrientation.VERTICAL
    carrier_freq_hz: float = Field(3.7e9, gt=0)
    bandwidth_hz: float = Field(20e6, gt=0)
    rep_rate_hz: float = Field(100.0, gt=0)

    @model_validator(mode="after")
    def _check_taps(self) -> "SynthConfig":
        taps = getattr(self.model, "n_delay_taps", None)
        if taps is not None and taps > self.n_freq:
            raise ValueError(f"n_delay_taps={taps} exceeds n_freq={self.n_freq}")
        if self.lost_samples is not None and self.lost_samples.burst_distribution is not None:
            try:
                validate_burst_distribution(self.lost_samples.burst_distribution)
            except ConfigError as e:
                raise ValueError(str(e)) from e
        return self

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.n_time, self.n_freq, self.n_ant)


def _format_validation_error(error: ValidationError) -> str:
    return "\n".join(
        f"  - {'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}"
        for e in error.errors()
    )


def load_synth_config(data: Mapping[str, Any], **overrides: Any) -> SynthConfig:
    """
    Validate a synth config mapping (e.g. parsed YAML).

    Raises:
        ConfigError: With one bullet per invalid field
    """
    merged = dict(data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SynthConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"invalid synth config:\n{_format_validation_error(e)}") from e


def load_trend_profile(data: Mapping[str, Any]) -> TrendProfile:
    """Validate a trend profile mapping."""
    try:
        return TrendProfile.model_validate(dict(data))
    except ValidationError as e:
        raise ConfigError(f"invalid trend profile:\n{_format_validation_error(e)}") from e


# =============================================================================
# HELPERS
# =============================================================================

def _stream(seed: int, component: str) -> np.random.Generator:
    """Independent generator for one model component."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), _STREAMS[component]]))


def _complex_normal(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """CN(0, 1) samples: independent N(0, 1/2) real and imaginary parts."""
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def _layout_for(cfg: SynthConfig):
    if cfg.array == ArrayKind.DISTRIBUTED.value:
        return distributed_layout(cfg.n_ant, seed=int(_stream(cfg.seed, "layout").integers(2**31)))
    if cfg.n_ant == get_config().array.rows * get_config().array.columns:
        return co_located_layout(cfg.carrier_freq_hz)
    return default_layout(cfg.n_ant, cfg.carrier_freq_hz)


def _wrap(cfg: SynthConfig, data: np.ndarray) -> ChannelTensor:
    return ChannelTensor(
        data=data,
        layout=_layout_for(cfg),
        carrier_freq_hz=cfg.carrier_freq_hz,
        bandwidth_hz=cfg.bandwidth_hz,
        rep_rate_hz=cfg.rep_rate_hz,
        ue_orientation=cfg.ue_orientation,
    )


# =============================================================================
# GENERATORS
# =============================================================================

def gen_iid(cfg: SynthConfig) -> ChannelTensor:
    """
    I.i.d. circularly-symmetric complex Gaussian channel, CN(0, 1).

    Drawn in fixed-size time chunks to bound peak memory; the chunk size is
    part of the stream layout, so output is bit-identical per seed.
    """
    n, f, m = cfg.dims
    rng = _stream(cfg.seed, "small_scale")
    data = np.empty((n, f, m), dtype=np.complex128)
    chunk = get_config().synth_chunk_samples
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        data[start:stop] = _complex_normal(rng, (stop - start, f, m))
    logger.debug("generated i.i.d. tensor %s (seed=%d)", cfg.dims, cfg.seed)
    return _wrap(cfg, data)


def exponential_correlation(n_ant: int, rho: float) -> np.ndarray:
    """Spatial correlation matrix R_ij = rho^|i - j| over antenna index."""
    idx = np.arange(n_ant)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def gen_correlated(cfg: SynthConfig) -> ChannelTensor:
    """
    Spatially, temporally and frequency-correlated Gaussian channel.

    White CN(0, 1) innovations w(n, tap, m) are coloured in three linear
    steps, each preserving unit-variance marginals:
      1. across antennas by the Cholesky factor of rho^|i-j|,
      2. across time by an AR(1) recursion with coefficient temporal_rho,
      3. across frequency by a DFT of n_delay_taps equal-power taps.

    Raises:
        ConfigError: If the config's model is not CorrelatedModel
    """
    if not isinstance(cfg.model, CorrelatedModel):
        raise ConfigError(f"gen_correlated needs a correlated model, got {cfg.model.kind}")
    n, f, m = cfg.dims
    model = cfg.model
    taps = model.n_delay_taps or f
    rng = _stream(cfg.seed, "small_scale")

    chol_t = None
    if model.spatial_rho > 0.0 and m > 1:
        chol_t = np.linalg.cholesky(exponential_correlation(m, model.spatial_rho)).T

    rho_t = model.temporal_rho
    innovation_scale = np.sqrt(1.0 - rho_t ** 2)

    data = np.empty((n, f, m), dtype=np.complex128)
    state = None
    chunk = get_config().synth_chunk_samples
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        w = _complex_normal(rng, (stop - start, taps, m))
        if chol_t is not None:
            w = w @ chol_t
        if rho_t > 0.0:
            for i in range(w.shape[0]):
                if state is not None:
                    w[i] = rho_t * state + innovation_scale * w[i]
                state = w[i]
        data[start:stop] = np.fft.fft(w, n=f, axis=1) / np.sqrt(taps)

    logger.debug(
        "generated correlated tensor %s (rho_s=%.3f, rho_t=%.3f, taps=%d)",
        cfg.dims, model.spatial_rho, rho_t, taps,
    )
    return _wrap(cfg, data)


def gen_rician(cfg: SynthConfig) -> ChannelTensor:
    """
    Rician channel: sqrt(K/(K+1)) * exp(j*phi_m) + sqrt(1/(K+1)) * CN(0, 1).

    The line-of-sight phase phi_m is drawn once per antenna and held over
    time and frequency; mean gain stays 1.
    """
    if not isinstance(cfg.model, RicianModel):
        raise ConfigError(f"gen_rician needs a rician model, got {cfg.model.kind}")
    k = cfg.model.k_factor
    scatter = gen_iid(cfg).data
    phases = _stream(cfg.seed, "los_phase").uniform(0.0, 2 * np.pi, size=cfg.n_ant)
    los = np.sqrt(k / (k + 1.0)) * np.exp(1j * phases)
    data = los[None, None, :] + np.sqrt(1.0 / (k + 1.0)) * scatter
    return _wrap(cfg, data)


def apply_large_scale(tensor: ChannelTensor, profile: TrendProfile, seed: int) -> ChannelTensor:
    """
    Impose a dB trend, shadowing and per-antenna offsets on a tensor.

    For unit-power input the aggregate gain 10*log10(sum_m mean_f |h|^2)
    becomes slope_k * n + intercept_m + s(n), where s is white Gaussian noise
    smoothed by a moving average of length shadow_coherence and scaled to
    standard deviation shadow_sigma. Offsets are drawn once per antenna and
    rescaled so that they do not move the aggregate level.
    """
    n, m = tensor.n_time, tensor.n_ant
    level_db = profile.slope_k * np.arange(n) + profile.intercept_m - 10.0 * np.log10(m)

    if profile.shadow_sigma > 0.0:
        c = profile.shadow_coherence
        white = _stream(seed, "shadowing").standard_normal(n + c - 1)
        smoothed = np.convolve(white, np.ones(c) / c, mode="valid")
        level_db = level_db + profile.shadow_sigma * np.sqrt(c) * smoothed

    offsets_db = np.zeros(m)
    if profile.per_antenna_offset_sigma > 0.0:
        offsets_db = _stream(seed, "antenna_offsets").normal(0.0, profile.per_antenna_offset_sigma, m)
        offsets_db -= 10.0 * np.log10(np.mean(10.0 ** (offsets_db / 10.0)))

    amplitude = 10.0 ** ((level_db[:, None, None] + offsets_db[None, None, :]) / 20.0)
    return tensor.replace(data=tensor.data * amplitude)


def inject_lost_samples(
    tensor: ChannelTensor,
    rate: float,
    depth_db: float,
    burst_dist: Optional[Dict[int, float]] = None,
    seed: int = 0,
) -> Tuple[ChannelTensor, np.ndarray]:
    """
    Attenuate random bursts of time samples across all (f, m).

    Bursts start with probability rate / E[burst length] at each index, so
    about rate * N indices end up lost.

    Args:
        tensor: Input tensor
        rate: Expected fraction of lost time indices, 0 <= rate <= 0.1
        depth_db: Attenuation of a lost sample, >= 10 dB
        burst_dist: Probability of each burst length 1..4
        seed: Seed for the lost-sample stream

    Returns:
        (attenuated tensor, truth mask over n)

    Raises:
        ConfigError: If parameters are out of range
    """
    if not 0.0 <= rate <= 0.1:
        raise ConfigError(f"lost-sample rate must be in [0, 0.1], got {rate}")
    if rate * tensor.n_time > tensor.n_time / 2:
        raise ConfigError("lost-sample rate would lose more than half the samples")
    if depth_db < 10.0:
        raise ConfigError(f"lost-sample depth must be >= 10 dB, got {depth_db}")
    dist = dict(burst_dist) if burst_dist is not None else dict(get_config().qc.burst_distribution)
    validate_burst_distribution(dist)

    n = tensor.n_time
    mask = np.zeros(n, dtype=bool)
    if rate == 0.0:
        return tensor, mask

    lengths = np.array(sorted(dist))
    probs = np.array([dist[k] for k in lengths])
    mean_length = float(np.sum(lengths * probs))

    rng = _stream(seed, "lost_samples")
    starts = np.flatnonzero(rng.random(n) < rate / mean_length)
    burst = rng.choice(lengths, size=starts.size, p=probs)
    for s, length in zip(starts, burst):
        mask[s:s + length] = True

    data = np.array(tensor.data)
    data[mask] *= 10.0 ** (-depth_db / 20.0)
    logger.info("injected %d lost samples in %d bursts", int(mask.sum()), starts.size)
    return tensor.replace(data=data), mask


def synthesize(cfg: SynthConfig) -> Tuple[ChannelTensor, np.ndarray]:
    """
    Generate the tensor a SynthConfig describes, with overlays applied.

    Returns:
        (tensor, truth mask of injected lost samples)
    """
    if isinstance(cfg.model, CorrelatedModel):
        tensor = gen_correlated(cfg)
    elif isinstance(cfg.model, RicianModel):
        tensor = gen_rician(cfg)
    else:
        tensor = gen_iid(cfg)

    if cfg.large_scale is not None:
        tensor = apply_large_scale(tensor, cfg.large_scale, cfg.seed)

    mask = np.zeros(tensor.n_time, dtype=bool)
    if cfg.lost_samples is not None:
        lost = cfg.lost_samples
        tensor, mask = inject_lost_samples(
            tensor, lost.rate, lost.depth_db, lost.burst_distribution, cfg.seed
        )
    return tensor, mask
