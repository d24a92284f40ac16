"""
Errors and argument validation for the channel hardening toolkit.

Every failure the toolkit reports is a ToolkitError. The CLI maps the two
branches to exit codes: ConfigError -> 2, DataError -> 3.
"""

import math
from typing import Dict, List, Optional, Sequence


# =============================================================================
# ERRORS
# =============================================================================

class ToolkitError(Exception):
    """Base class for all toolkit failures."""
    pass


class ConfigError(ToolkitError):
    """Raised when parameters or configuration files are invalid."""
    pass


class DataError(ToolkitError):
    """Raised when channel data cannot support the requested operation."""
    pass


class EmptySubsetError(DataError):
    """Raised when an antenna subset is empty."""
    pass


class ZeroPowerError(DataError):
    """Raised when a normalization or dB conversion meets zero power."""
    pass


class SubsetMismatchError(DataError):
    """Raised when a subset differs from the one a tensor was normalized over."""
    pass


class SubsetTooLargeError(DataError):
    """Raised when more antennas are requested than a policy can provide."""
    pass


class AllMaskedError(DataError):
    """Raised when every time sample is flagged as lost."""
    pass


class InsufficientSamplesError(DataError):
    """Raised when there are too few samples for an estimate."""
    pass


class ChtFormatError(DataError):
    """Raised when a CHT file cannot be decoded."""
    code = "cht-format"


class ChtMagicError(ChtFormatError):
    """Raised when a file does not start with the CHT magic bytes."""
    code = "bad-magic"


class ChtVersionError(ChtFormatError):
    """Raised when a CHT file has an unsupported version."""
    code = "bad-version"


class ChtHeaderError(ChtFormatError):
    """Raised when the CHT metadata header is malformed or invalid."""
    code = "invalid-header"


class ChtTruncatedError(ChtFormatError):
    """Raised when a CHT file ends before its header or mid-coefficient."""
    code = "truncated"


class ChtDimensionError(ChtFormatError):
    """Raised when the payload holds a different number of coefficients than N*F*M."""
    code = "dimension-mismatch"


# =============================================================================
# VALIDATION FUNCTIONS
# =============================================================================

def validate_probability(p: float, name: str = "p", upper: float = 1.0,
                         include_upper: bool = False) -> None:
    """
    Validate a probability lies in (0, upper) or (0, upper].

    Raises:
        ConfigError: If p is outside the allowed interval
    """
    if not isinstance(p, (int, float)) or math.isnan(p):
        raise ConfigError(f"{name} must be a number, got {p!r}")
    above = p > upper if include_upper else p >= upper
    if p <= 0.0 or above:
        bracket = "]" if include_upper else ")"
        raise ConfigError(f"{name}={p} outside (0, {upper}{bracket}")


def validate_subset(subset: Sequence[int], available: Sequence[int]) -> List[int]:
    """
    Validate an antenna subset against the antenna ids a tensor holds.

    Args:
        subset: Requested antenna ids
        available: Antenna ids present in the tensor

    Returns:
        The subset sorted ascending

    Raises:
        EmptySubsetError: If the subset is empty
        ConfigError: If an id is unknown or repeated
    """
    ids = [int(i) for i in subset]
    if not ids:
        raise EmptySubsetError("antenna subset is empty")
    if len(set(ids)) != len(ids):
        raise ConfigError(f"antenna subset has repeated ids: {sorted(ids)}")
    unknown = sorted(set(ids) - set(int(a) for a in available))
    if unknown:
        raise ConfigError(f"antenna ids {unknown} not present in tensor")
    return sorted(ids)


def validate_window(window: int) -> None:
    """
    Validate a median-filter window length.

    Raises:
        ConfigError: If window is even or shorter than 3
    """
    if window < 3 or window % 2 == 0:
        raise ConfigError(f"window must be odd and >= 3, got {window}")


def validate_sizes(sizes: Sequence[int]) -> None:
    """
    Validate subset sizes are positive and strictly increasing.

    Raises:
        ConfigError: If sizes are empty, non-positive or not increasing
    """
    if not sizes:
        raise ConfigError("subset sizes are empty")
    if sizes[0] < 1:
        raise ConfigError(f"subset sizes must be >= 1, got {list(sizes)}")
    for a, b in zip(sizes, sizes[1:]):
        if b <= a:
            raise ConfigError(f"subset sizes must be strictly increasing, got {list(sizes)}")


def validate_burst_distribution(dist: Dict[int, float]) -> None:
    """
    Validate a burst-length distribution over lengths 1..4.

    Raises:
        ConfigError: If lengths or probabilities are invalid
    """
    bad_lengths = [k for k in dist if k not in (1, 2, 3, 4)]
    if bad_lengths:
        raise ConfigError(f"burst lengths must be in 1..4, got {bad_lengths}")
    if any(v < 0 for v in dist.values()):
        raise ConfigError(f"burst probabilities must be >= 0, got {dist}")
    total = sum(dist.values())
    if not math.isclose(total, 1.0, abs_tol=1e-9):
        raise ConfigError(f"burst probabilities must sum to 1, got {total}")


def collect_errors(checks: Sequence[tuple]) -> Optional[str]:
    """
    Run (callable, args) checks and gather every ConfigError message.

    Returns:
        A bullet list of messages, or None if all checks passed
    """
    errors = []
    for check, args in checks:
        try:
            check(*args)
        except ConfigError as e:
            errors.append(str(e))
    if not errors:
        return None
    return "\n".join(f"  - {e}" for e in errors)
