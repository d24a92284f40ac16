"""
Channel hardening toolkit.

Normalization and combining, synthetic channels, lost-sample conditioning,
hardening curves, gamma tail models, fading margins and shadowing fits for
massive MIMO channel tensors.
"""

from mimo.hardening.core import (
    Antenna,
    ArrayLayout,
    ArrayKind,
    ChannelTensor,
    Polarization,
    SubsetMode,
    SubsetPolicy,
    UeOrientation,
    co_located_layout,
    distributed_layout,
)
from mimo.hardening.computation import (
    combined_gain,
    normalize,
    select_subset,
    subset_tensors,
)
from mimo.hardening.synth import (
    CorrelatedModel,
    IidModel,
    LostSampleProfile,
    RicianModel,
    SynthConfig,
    TrendProfile,
    apply_large_scale,
    gen_correlated,
    gen_iid,
    gen_rician,
    inject_lost_samples,
    load_synth_config,
    synthesize,
)
from mimo.hardening.qc import (
    QcReport,
    detect_lost_samples,
    drop_lost,
    interpolate_lost,
    max_ue_speed,
    qc_report,
    time_autocorrelation,
)
from mimo.hardening.curves import (
    HardeningCurve,
    array_gain_db,
    gain_std,
    hardening_curve,
    iid_equivalent_antennas,
    iid_reference_curve,
    per_antenna_mean_stats,
)
from mimo.hardening.tails import (
    Ecdf,
    FadingMarginTable,
    GammaFit,
    cdf_offset,
    cdf_offset_range,
    dof_curve,
    ecdf,
    fading_margin,
    fading_margin_table,
    fit_gamma,
    gamma_quantile,
    gamma_reference_cdf,
    quantile,
)
from mimo.hardening.shadowing import (
    ShadowingFit,
    detrend_linear,
    fit_lognormal,
    fit_shadowing,
    large_scale_series,
    shadowing_span,
)
from mimo.hardening.validation import ConfigError, DataError, ToolkitError

__all__ = [
    # Core data structures
    "Antenna",
    "ArrayLayout",
    "ArrayKind",
    "ChannelTensor",
    "Polarization",
    "SubsetMode",
    "SubsetPolicy",
    "UeOrientation",
    "co_located_layout",
    "distributed_layout",
    # Normalization and combining
    "combined_gain",
    "normalize",
    "select_subset",
    "subset_tensors",
    # Synthesis
    "CorrelatedModel",
    "IidModel",
    "LostSampleProfile",
    "RicianModel",
    "SynthConfig",
    "TrendProfile",
    "apply_large_scale",
    "gen_correlated",
    "gen_iid",
    "gen_rician",
    "inject_lost_samples",
    "load_synth_config",
    "synthesize",
    # Conditioning
    "QcReport",
    "detect_lost_samples",
    "drop_lost",
    "interpolate_lost",
    "max_ue_speed",
    "qc_report",
    "time_autocorrelation",
    # Hardening
    "HardeningCurve",
    "array_gain_db",
    "gain_std",
    "hardening_curve",
    "iid_equivalent_antennas",
    "iid_reference_curve",
    "per_antenna_mean_stats",
    # Tails
    "Ecdf",
    "FadingMarginTable",
    "GammaFit",
    "cdf_offset",
    "cdf_offset_range",
    "dof_curve",
    "ecdf",
    "fading_margin",
    "fading_margin_table",
    "fit_gamma",
    "gamma_quantile",
    "gamma_reference_cdf",
    "quantile",
    # Shadowing
    "ShadowingFit",
    "detrend_linear",
    "fit_lognormal",
    "fit_shadowing",
    "large_scale_series",
    "shadowing_span",
    # Errors
    "ConfigError",
    "DataError",
    "ToolkitError",
]
