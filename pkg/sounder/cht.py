"""
CHT v1 channel tensor files.

Layout:

    offset 0   4 bytes   magic b"CHT "
    offset 4   uint16 LE version (1)
    offset 6   uint32 LE header length in bytes
    offset 10  UTF-8 YAML metadata header
    then       float32 LE (real, imag) pairs, n-major, then f, then m

Coefficients are stored as 32-bit floats and widened to complex128 on read,
so a read -> write -> read cycle reproduces the payload bit for bit.
"""

import logging
import struct
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mimo.hardening.core import (
    Antenna,
    ArrayKind,
    ArrayLayout,
    ChannelTensor,
    Polarization,
    UeOrientation,
)
from mimo.hardening.validation import (
    ChtDimensionError,
    ChtHeaderError,
    ChtMagicError,
    ChtTruncatedError,
    ChtVersionError,
    ConfigError,
    DataError,
)

logger = logging.getLogger(__name__)

MAGIC = b"CHT "
VERSION = 1
_PREAMBLE = struct.Struct("<4sHI")
_COEFFICIENT_BYTES = 8


class ChtAntenna(BaseModel):
    model_config = ConfigDict(extra="forbid")
    index: int = Field(ge=0)
    position: Tuple[float, float, float]
    orientation: Tuple[float, float, float]
    polarization: Polarization


class ChtLayout(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: ArrayKind
    antennas: List[ChtAntenna]


class ChtHeader(BaseModel):
    """Metadata header of a CHT v1 file."""
    model_config = ConfigDict(extra="forbid")

    n_time: int = Field(ge=1)
    n_freq: int = Field(ge=1)
    n_ant: int = Field(ge=1)
    carrier_freq_hz: float = Field(gt=0)
    bandwidth_hz: float = Field(gt=0)
    rep_rate_hz: float = Field(gt=0)
    ue_orientation: UeOrientation
    layout: ChtLayout
    antenna_ids: Optional[List[int]] = None
    lost_indices: Optional[List[int]] = None

    @model_validator(mode="after")
    def _check_counts(self) -> "ChtHeader":
        if len(self.layout.antennas) != self.n_ant:
            raise ValueError(f"layout lists {len(self.layout.antennas)} antennas, n_ant={self.n_ant}")
        if self.antenna_ids is not None and len(self.antenna_ids) != self.n_ant:
            raise ValueError(f"{len(self.antenna_ids)} antenna ids for n_ant={self.n_ant}")
        if self.lost_indices and not all(0 <= i < self.n_time for i in self.lost_indices):
            raise ValueError("lost_indices outside 0..n_time-1")
        return self

    @property
    def coefficient_count(self) -> int:
        return self.n_time * self.n_freq * self.n_ant


def header_for(tensor: ChannelTensor) -> ChtHeader:
    """Metadata header describing a tensor."""
    lost = None
    if tensor.lost_mask is not None:
        lost = [int(i) for i in np.flatnonzero(tensor.lost_mask)]
    return ChtHeader(
        n_time=tensor.n_time,
        n_freq=tensor.n_freq,
        n_ant=tensor.n_ant,
        carrier_freq_hz=tensor.carrier_freq_hz,
        bandwidth_hz=tensor.bandwidth_hz,
        rep_rate_hz=tensor.rep_rate_hz,
        ue_orientation=tensor.ue_orientation,
        layout=ChtLayout(
            kind=tensor.layout.kind,
            antennas=[
                ChtAntenna(
                    index=a.index,
                    position=a.position,
                    orientation=a.orientation,
                    polarization=a.polarization,
                )
                for a in tensor.layout.antennas
            ],
        ),
        antenna_ids=list(tensor.antenna_ids),
        lost_indices=lost,
    )


def encode(tensor: ChannelTensor) -> bytes:
    """Serialize a tensor to CHT v1 bytes."""
    header = yaml.safe_dump(header_for(tensor).model_dump(mode="json"), sort_keys=False).encode("utf-8")
    payload = np.empty(tensor.data.shape + (2,), dtype="<f4")
    payload[..., 0] = tensor.data.real
    payload[..., 1] = tensor.data.imag
    return _PREAMBLE.pack(MAGIC, VERSION, len(header)) + header + payload.tobytes()


def _parse_header(raw: bytes) -> ChtHeader:
    try:
        data = yaml.safe_load(raw.decode("utf-8"))
    except (UnicodeDecodeError, yaml.YAMLError) as e:
        raise ChtHeaderError(f"header is not valid UTF-8 YAML: {e}") from e
    if not isinstance(data, dict):
        raise ChtHeaderError("header is not a mapping")
    try:
        return ChtHeader.model_validate(data)
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ChtHeaderError(f"invalid header: {details}") from e


def decode(blob: bytes) -> ChannelTensor:
    """
    Parse CHT v1 bytes.

    Raises:
        ChtMagicError: Wrong magic bytes
        ChtVersionError: Unsupported version
        ChtTruncatedError: File ends inside the preamble, header or a coefficient
        ChtHeaderError: Header is not valid YAML or fails validation
        ChtDimensionError: Payload holds a different number of coefficients than N*F*M
    """
    head = blob[:len(MAGIC)]
    if head != MAGIC[:len(head)]:
        raise ChtMagicError(f"not a CHT file (magic {head!r})")
    if len(blob) < _PREAMBLE.size:
        raise ChtTruncatedError(f"file ends inside the preamble ({len(blob)} bytes)")

    _, version, header_len = _PREAMBLE.unpack_from(blob)
    if version != VERSION:
        raise ChtVersionError(f"unsupported CHT version {version}, expected {VERSION}")
    start = _PREAMBLE.size
    if len(blob) < start + header_len:
        raise ChtTruncatedError(f"file ends inside the {header_len}-byte header")
    header = _parse_header(blob[start:start + header_len])

    payload = blob[start + header_len:]
    if len(payload) % _COEFFICIENT_BYTES:
        raise ChtTruncatedError(f"payload of {len(payload)} bytes ends mid-coefficient")
    count = len(payload) // _COEFFICIENT_BYTES
    if count != header.coefficient_count:
        raise ChtDimensionError(
            f"payload holds {count} coefficients, header declares "
            f"{header.n_time}x{header.n_freq}x{header.n_ant}={header.coefficient_count}"
        )

    pairs = np.frombuffer(payload, dtype="<f4").reshape(header.n_time, header.n_freq, header.n_ant, 2)
    if not np.all(np.isfinite(pairs)):
        raise DataError("payload contains NaN or Inf")
    data = pairs[..., 0].astype(np.float64) + 1j * pairs[..., 1].astype(np.float64)

    mask = None
    if header.lost_indices is not None:
        mask = np.zeros(header.n_time, dtype=bool)
        mask[header.lost_indices] = True

    try:
        layout = ArrayLayout(
            antennas=tuple(
                Antenna(
                    index=a.index,
                    position=tuple(a.position),
                    orientation=tuple(a.orientation),
                    polarization=a.polarization,
                )
                for a in header.layout.antennas
            ),
            kind=header.layout.kind,
        )
        return ChannelTensor(
            data=data,
            layout=layout,
            carrier_freq_hz=header.carrier_freq_hz,
            bandwidth_hz=header.bandwidth_hz,
            rep_rate_hz=header.rep_rate_hz,
            ue_orientation=header.ue_orientation,
            lost_mask=mask,
            antenna_ids=tuple(header.antenna_ids or ()),
        )
    except ConfigError as e:
        raise ChtHeaderError(f"invalid header: {e}") from e


def write_cht(tensor: ChannelTensor, path: Union[str, Path]) -> Path:
    """Write a tensor to a CHT v1 file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode(tensor))
    logger.info("wrote %s (%dx%dx%d)", path, tensor.n_time, tensor.n_freq, tensor.n_ant)
    return path


def read_cht(path: Union[str, Path]) -> ChannelTensor:
    """
    Read a CHT v1 file.

    Raises:
        ConfigError: If the file does not exist
        ChtFormatError: If the file cannot be decoded
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such CHT file: {path}")
    tensor = decode(path.read_bytes())
    logger.info("read %s (%dx%dx%d)", path, tensor.n_time, tensor.n_freq, tensor.n_ant)
    return tensor
