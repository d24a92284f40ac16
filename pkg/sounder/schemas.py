"""
Run configuration and result shapes for the sounder CLI.

RunConfig is validated by pydantic; results and manifests are plain
dataclasses serialized with to_dict().
"""

from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from mimo.hardening.core import Polarization, SubsetMode


class Command(str, Enum):
    """CLI subcommands."""
    SYNTH = "synth"
    QC = "qc"
    HARDENING = "hardening"
    TAILS = "tails"
    MARGIN = "margin"
    SHADOWING = "shadowing"
    REPORT = "report"


# Subcommands that analyse an existing tensor
ANALYSIS_COMMANDS = {Command.QC, Command.HARDENING, Command.TAILS, Command.MARGIN, Command.SHADOWING}


# =============================================================================
# Input Schemas
# =============================================================================

class RunConfig(BaseModel):
    """Parameters of one CLI run."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command
    input: Optional[Path] = None
    synth_config: Optional[Path] = None
    preset: Optional[str] = None
    output_dir: Optional[Path] = None
    seed: Optional[int] = None
    strict: bool = False

    # Subsets
    subset_mode: SubsetMode = SubsetMode.FIRST_K
    polarization: Optional[Polarization] = None
    sizes: Optional[List[int]] = None

    # Conditioning
    threshold_db: Optional[float] = Field(None, gt=0)
    window: Optional[int] = None
    max_lag: Optional[int] = Field(None, ge=1)
    autocorr_full: bool = False
    envelope: bool = False
    ue_speed_mps: Optional[float] = Field(None, ge=0)
    missing: Literal["drop", "interpolate"] = "drop"

    # Tails
    p_list: Optional[List[float]] = None
    method: Optional[Literal["mle", "mom"]] = None
    scale_mode: Optional[Literal["joint", "constrained"]] = None
    offset_unit: Optional[Literal["db", "linear"]] = None
    offset_p: float = Field(1e-3, gt=0, lt=1)

    # Shadowing
    from_sample: Optional[int] = Field(None, ge=0)
    trim_seconds: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _check_sources(self) -> "RunConfig":
        if self.command in ANALYSIS_COMMANDS and self.input is None:
            raise ValueError(f"{self.command.value} needs --input")
        if self.command == Command.SYNTH and self.synth_config is None and self.preset is None:
            raise ValueError("synth needs --config or --preset")
        if self.command == Command.REPORT and self.input is None and self.preset is None:
            raise ValueError("report needs --input or --preset")
        for name in ("input", "synth_config"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ValueError(f"{name} file not found: {path}")
        if self.subset_mode == SubsetMode.RANDOM_K and self.seed is None:
            raise ValueError("random-k subsets need --seed")
        if self.subset_mode == SubsetMode.POLARIZATION_ONLY and self.polarization is None:
            raise ValueError("polarization-only subsets need --polarization")
        return self


# =============================================================================
# Output Schemas
# =============================================================================

@dataclass
class RunManifest:
    """What a run did, enough to reproduce its artifacts."""
    command: str
    tool_version: str
    config: Dict[str, Any]
    seed: Optional[int]
    input_sha256: Optional[str]
    dims: Optional[List[int]]
    artifacts: List[str] = field(default_factory=list)
    unreliable_rows: int = 0


@dataclass
class RunResult:
    """Outcome handed back to the CLI."""
    exit_code: int
    output_dir: str
    artifacts: List[str]
    summary: Dict[str, Any] = field(default_factory=dict)
    unreliable_rows: int = 0


# =============================================================================
# Serialization helpers
# =============================================================================

def to_dict(obj: Any) -> Any:
    """Convert dataclasses, enums, paths and numpy scalars to plain data."""
    if hasattr(obj, "__dataclass_fields__"):
        return to_dict(asdict(obj))
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, dict):
        return {to_dict(k): to_dict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_dict(item) for item in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj


# =============================================================================
# Scenario presets
# =============================================================================

class ScenarioAnalysis(BaseModel):
    """Analysis defaults a scenario preset ships with."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    subset_mode: SubsetMode = SubsetMode.FIRST_K
    sizes: Optional[List[int]] = None
    p_list: Optional[List[float]] = None
    max_lag: Optional[int] = Field(None, ge=1)
    ue_speed_mps: Optional[float] = Field(None, ge=0)
    from_sample: Optional[int] = Field(None, ge=0)


class Scenario(BaseModel):
    """A named synthetic experiment: how to generate it and how to analyse it."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    description: str = ""
    synth: Dict[str, Any]
    analysis: ScenarioAnalysis = Field(default_factory=ScenarioAnalysis)
