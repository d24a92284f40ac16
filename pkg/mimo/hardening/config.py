"""
Configuration for the channel hardening toolkit.

All tunable defaults live here, not in code. Per-call arguments override
them; modules read the active config at call time so tests can swap it.
"""

from dataclasses import dataclass
from typing import Dict, Tuple


@dataclass
class ArrayDefaults:
    """Geometry of the default co-located panel."""
    rows: int
    columns: int
    spacing_wavelengths: float


@dataclass
class QcDefaults:
    """Lost-sample detection and time-correlation settings."""
    threshold_db: float
    window: int
    max_detection_passes: int
    correlation_limit: float
    envelope_correlation: bool
    burst_distribution: Dict[int, float]


@dataclass
class TailDefaults:
    """Tail modeling, fitting and fading-margin settings."""
    quantile_method: str
    sufficiency_factor: float     # reliable when count >= factor / p
    p_list: Tuple[float, ...]
    fit_method: str               # "mle" or "mom"
    scale_mode: str               # "joint" or "constrained"
    offset_unit: str              # "db" or "linear"
    mle_tolerance: float
    mle_max_iterations: int
    ecdf_export_points: int


@dataclass
class ShadowingDefaults:
    """Large-scale fading analysis settings."""
    min_residuals: int
    from_sample: int
    level_trim_seconds: float


@dataclass
class ToolkitConfig:
    """Complete toolkit configuration."""
    subset_sizes: Tuple[int, ...]
    array: ArrayDefaults
    qc: QcDefaults
    tails: TailDefaults
    shadowing: ShadowingDefaults
    output_dir_env: str = "HARDENING_OUTPUT_DIR"
    speed_of_light: float = 299_792_458.0
    synth_chunk_samples: int = 250


_DEFAULT_CONFIG = ToolkitConfig(
    subset_sizes=(1, 2, 4, 8, 16, 32, 64, 100),
    array=ArrayDefaults(rows=4, columns=25, spacing_wavelengths=0.5),
    qc=QcDefaults(
        threshold_db=15.0,
        window=21,
        max_detection_passes=5,
        correlation_limit=0.5,
        envelope_correlation=False,
        # Mostly 1-2 lost in a row, rarely 3-4
        burst_distribution={1: 0.6, 2: 0.3, 3: 0.07, 4: 0.03},
    ),
    tails=TailDefaults(
        quantile_method="hazen",
        sufficiency_factor=10.0,
        p_list=(1e-1, 1e-2, 1e-3, 1e-4, 1e-5),
        fit_method="mle",
        scale_mode="joint",
        offset_unit="db",
        mle_tolerance=1e-10,
        mle_max_iterations=200,
        ecdf_export_points=2000,
    ),
    shadowing=ShadowingDefaults(
        min_residuals=30,
        from_sample=0,
        level_trim_seconds=5.0,
    ),
)

# Active configuration (can be replaced at runtime)
_active_config: ToolkitConfig = _DEFAULT_CONFIG


def get_config() -> ToolkitConfig:
    """Get the active toolkit configuration."""
    return _active_config


def set_config(config: ToolkitConfig) -> None:
    """Set the active toolkit configuration."""
    global _active_config
    _active_config = config


def reset_config() -> None:
    """Reset to default configuration."""
    global _active_config
    _active_config = _DEFAULT_CONFIG
