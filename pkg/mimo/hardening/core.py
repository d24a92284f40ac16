"""
Core data structures for the channel hardening toolkit.

A ChannelTensor holds complex coefficients h(n, f, m) for one UE antenna:
N time snapshots, F frequency points and M base-station antennas.
Tensors are immutable; every operation returns a new one.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, List, Optional, Tuple

import numpy as np

from mimo.hardening.config import get_config
from mimo.hardening.validation import ConfigError, validate_sizes


class Polarization(str, Enum):
    """Base-station antenna polarization label."""
    V = "V"
    H = "H"


class ArrayKind(str, Enum):
    """Deployment of the base-station antennas."""
    CO_LOCATED = "co-located"
    DISTRIBUTED = "distributed"


class UeOrientation(str, Enum):
    """Orientation of the UE dipole the tensor was recorded with."""
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"


class SubsetMode(str, Enum):
    """How antenna subsets are picked for each subset size."""
    FIRST_K = "first-k"
    RANDOM_K = "random-k"
    POLARIZATION_ONLY = "polarization-only"


@dataclass(frozen=True)
class Antenna:
    """A single base-station antenna."""
    index: int
    position: Tuple[float, float, float]          # meters
    orientation: Tuple[float, float, float]       # unit vector
    polarization: Polarization


@dataclass(frozen=True)
class ArrayLayout:
    """
    Antenna roster of a base-station array.

    Indices are 0..M-1 in roster order.
    """
    antennas: Tuple[Antenna, ...]
    kind: ArrayKind

    def __post_init__(self) -> None:
        indices = [a.index for a in self.antennas]
        if indices != list(range(len(indices))):
            raise ConfigError(
                f"antenna indices must be 0..{len(indices) - 1} in order, got {indices[:10]}..."
            )

    @property
    def n_ant(self) -> int:
        return len(self.antennas)

    def indices_with_polarization(self, polarization: Polarization) -> List[int]:
        """Indices of antennas carrying the given polarization label."""
        return [a.index for a in self.antennas if a.polarization == polarization]

    def restrict(self, ids: List[int]) -> "ArrayLayout":
        """Layout of the selected antennas, re-indexed 0..k-1."""
        antennas = tuple(
            replace(self.antennas[i], index=new) for new, i in enumerate(ids)
        )
        return ArrayLayout(antennas=antennas, kind=self.kind)


def co_located_layout(
    carrier_freq_hz: float = 3.7e9,
    rows: Optional[int] = None,
    columns: Optional[int] = None,
) -> ArrayLayout:
    """
    Planar panel with half-wavelength spacing.

    Elements are numbered row by row; one polarization is connected per
    element, alternating between consecutive elements, so a 4x25 panel has
    50 V and 50 H antennas.
    """
    defaults = get_config().array
    rows = rows if rows is not None else defaults.rows
    columns = columns if columns is not None else defaults.columns
    spacing = defaults.spacing_wavelengths * get_config().speed_of_light / carrier_freq_hz

    antennas = []
    for row in range(rows):
        for col in range(columns):
            index = row * columns + col
            antennas.append(Antenna(
                index=index,
                position=(0.0, col * spacing, row * spacing),
                orientation=(1.0, 0.0, 0.0),
                polarization=Polarization.V if index % 2 == 0 else Polarization.H,
            ))
    return ArrayLayout(antennas=tuple(antennas), kind=ArrayKind.CO_LOCATED)


def distributed_layout(
    n_ant: int,
    seed: int,
    extent_m: Tuple[float, float, float] = (20.0, 10.0, 3.0),
) -> ArrayLayout:
    """
    Randomly placed dipoles with random orientations and polarizations.

    Reproducible for a given seed.
    """
    rng = np.random.default_rng(seed)
    positions = rng.uniform(0.0, 1.0, size=(n_ant, 3)) * np.asarray(extent_m)
    directions = rng.standard_normal((n_ant, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    pols = rng.integers(0, 2, size=n_ant)

    antennas = tuple(
        Antenna(
            index=i,
            position=tuple(float(v) for v in positions[i]),
            orientation=tuple(float(v) for v in directions[i]),
            polarization=Polarization.V if pols[i] == 0 else Polarization.H,
        )
        for i in range(n_ant)
    )
    return ArrayLayout(antennas=antennas, kind=ArrayKind.DISTRIBUTED)


def default_layout(n_ant: int, carrier_freq_hz: float = 3.7e9) -> ArrayLayout:
    """The default panel when it fits n_ant exactly, otherwise a single row."""
    defaults = get_config().array
    if n_ant == defaults.rows * defaults.columns:
        return co_located_layout(carrier_freq_hz)
    return co_located_layout(carrier_freq_hz, rows=1, columns=n_ant)


@dataclass(frozen=True)
class SubsetPolicy:
    """
    Which antennas make up each subset size of a hardening sweep.

    FIRST_K takes the lowest indices, RANDOM_K a seeded random draw (nested
    across sizes), POLARIZATION_ONLY the lowest indices with one label.
    """
    mode: SubsetMode = SubsetMode.FIRST_K
    sizes: Tuple[int, ...] = field(default_factory=lambda: tuple(get_config().subset_sizes))
    seed: Optional[int] = None
    polarization: Optional[Polarization] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        validate_sizes(self.sizes)
        if self.mode == SubsetMode.RANDOM_K and self.seed is None:
            raise ConfigError("random-k subsets need a seed")
        if self.mode == SubsetMode.POLARIZATION_ONLY and self.polarization is None:
            raise ConfigError("polarization-only subsets need a polarization (V or H)")

    def with_sizes(self, sizes: Tuple[int, ...]) -> "SubsetPolicy":
        return replace(self, sizes=tuple(sizes))


@dataclass(frozen=True, eq=False)
class ChannelTensor:
    """
    Complex channel coefficients indexed (time n, frequency f, antenna m).

    `antenna_ids` maps each column of `data` back to the roster index it
    came from; a tensor returned by normalize() carries only the selected
    antennas and `normalized=True`.
    """
    data: np.ndarray
    layout: ArrayLayout
    carrier_freq_hz: float = 3.7e9
    bandwidth_hz: float = 20e6
    rep_rate_hz: float = 100.0
    ue_orientation: UeOrientation = UeOrientation.VERTICAL
    lost_mask: Optional[np.ndarray] = None
    antenna_ids: Tuple[int, ...] = ()
    normalized: bool = False

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        # Read-only complex128 arrays come from other tensors and are shared
        if data.dtype != np.complex128 or data.flags.writeable:
            data = np.array(data, dtype=np.complex128)
        if data.ndim != 3:
            raise ConfigError(f"channel data must be 3-D (N, F, M), got shape {data.shape}")
        if min(data.shape) < 1:
            raise ConfigError(f"channel dimensions must be >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ConfigError("channel data contains NaN or Inf")
        if self.layout.n_ant != data.shape[2]:
            raise ConfigError(
                f"layout has {self.layout.n_ant} antennas but data has {data.shape[2]}"
            )
        for name in ("carrier_freq_hz", "bandwidth_hz", "rep_rate_hz"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        data.flags["WRITEABLE"] = False
        object.__setattr__(self, "data", data)

        if self.lost_mask is not None:
            mask = np.array(self.lost_mask, dtype=bool, copy=True).reshape(-1)
            if mask.size != data.shape[0]:
                raise ConfigError(f"lost_mask length {mask.size} != N={data.shape[0]}")
            mask.flags["WRITEABLE"] = False
            object.__setattr__(self, "lost_mask", mask)

        ids = tuple(int(i) for i in self.antenna_ids) or tuple(range(data.shape[2]))
        if len(ids) != data.shape[2]:
            raise ConfigError(f"{len(ids)} antenna ids for {data.shape[2]} antennas")
        object.__setattr__(self, "antenna_ids", ids)

    @classmethod
    def from_array(cls, data: Any, layout: Optional[ArrayLayout] = None, **metadata: Any) -> "ChannelTensor":
        """Build a tensor, defaulting the layout to the co-located panel."""
        arr = np.asarray(data)
        if layout is None:
            layout = default_layout(arr.shape[-1], metadata.get("carrier_freq_hz", 3.7e9))
        return cls(data=arr, layout=layout, **metadata)

    @property
    def n_time(self) -> int:
        return self.data.shape[0]

    @property
    def n_freq(self) -> int:
        return self.data.shape[1]

    @property
    def n_ant(self) -> int:
        return self.data.shape[2]

    @property
    def has_unhandled_losses(self) -> bool:
        return self.lost_mask is not None and bool(self.lost_mask.any())

    def power(self) -> np.ndarray:
        """Instantaneous channel gain |h|^2."""
        return self.data.real ** 2 + self.data.imag ** 2

    def replace(self, **changes: Any) -> "ChannelTensor":
        return replace(self, **changes)
