"""
Toolkit runner: binds the analysis modules into reproducible CLI runs.

Each run reads a CHT tensor (or synthesizes one from a scenario preset),
writes CSV/YAML artifacts into one output directory and records a manifest
with the config, seed and tool version. Manifests carry no timestamps, so
rerunning a manifest reproduces its directory byte for byte.
"""

import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import ValidationError

import sounder
from mimo.hardening.config import get_config
from mimo.hardening.core import ChannelTensor, SubsetMode, SubsetPolicy
from mimo.hardening.curves import array_gain_db, hardening_curve, iid_reference_curve, per_antenna_mean_stats
from mimo.hardening.computation import combined_gain, normalize, select_subset
from mimo.hardening.qc import detect_lost_samples, drop_lost, interpolate_lost, qc_report, time_autocorrelation
from mimo.hardening.shadowing import (
    fit_shadowing,
    gain_level_stats,
    normal_tail_excess,
    residual_cdf,
    trim_count,
    trim_leading,
)
from mimo.hardening.synth import SynthConfig, load_synth_config, synthesize
from mimo.hardening.tails import (
    cdf_offset,
    cdf_offset_range,
    dof_curve,
    ecdf,
    ecdf_table,
    fading_margin_table,
)
from mimo.hardening.validation import ConfigError, collect_errors
from sounder.cht import read_cht, write_cht
from sounder.reports import autocorr_rows, mask_rows, write_csv, write_yaml
from sounder.schemas import Command, RunConfig, RunManifest, RunResult, Scenario, to_dict

logger = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).parent.parent / "mimo" / "scenarios"
DEFAULT_OUTPUT_DIR = Path("hardening-output")
EXIT_UNRELIABLE = 4


# =============================================================================
# Scenario presets
# =============================================================================

def _load_yaml(path: Path) -> Any:
    """Parse a YAML file, turning syntax errors into ConfigError."""
    try:
        with open(path) as f:
            return yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path} is not valid YAML: {e}") from e


def _scenario_files() -> Dict[str, Path]:
    files = {}
    for path in sorted(SCENARIO_DIR.glob("*.yaml")):
        data = _load_yaml(path)
        name = data.get("name", path.stem) if isinstance(data, dict) else path.stem
        files[str(name)] = path
    return files


def list_scenarios() -> List[str]:
    """Names of the shipped scenario presets."""
    return list(_scenario_files())


def load_scenario(name: str) -> Tuple[Scenario, SynthConfig]:
    """
    Load and validate a scenario preset by name.

    Raises:
        ConfigError: If the preset is unknown or invalid
    """
    files = _scenario_files()
    if name not in files:
        raise ConfigError(f"unknown scenario {name!r}; available: {sorted(files)}")
    data = _load_yaml(files[name])
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid scenario {name!r}: {e}") from e
    return scenario, load_synth_config(scenario.synth)


def validate_scenarios() -> int:
    """
    Validate every shipped preset, reporting all failures at once.

    Returns:
        Number of presets validated

    Raises:
        ConfigError: With one bullet per invalid preset
    """
    names = list_scenarios()
    errors = collect_errors([(load_scenario, (n,)) for n in names])
    if errors:
        raise ConfigError(f"scenario presets failed validation:\n{errors}")
    return len(names)


# =============================================================================
# Helpers
# =============================================================================

def resolve_output_dir(explicit: Optional[Path] = None) -> Path:
    """--out wins, then the HARDENING_OUTPUT_DIR environment variable, then the default."""
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(get_config().output_dir_env)
    return Path(env) if env else DEFAULT_OUTPUT_DIR


def default_sizes(limit: int) -> Tuple[int, ...]:
    """Configured subset sizes below `limit`, ending at `limit`."""
    return tuple(s for s in get_config().subset_sizes if s < limit) + (limit,)


@dataclass
class Conditioned:
    """A tensor with lost samples handled, and where its samples came from."""
    tensor: ChannelTensor
    mask: np.ndarray
    time_index: np.ndarray


@dataclass
class _Step:
    artifacts: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    unreliable: int = 0

    def merge(self, other: "_Step") -> None:
        self.artifacts.extend(other.artifacts)
        self.summary.update(other.summary)
        self.unreliable += other.unreliable


# =============================================================================
# Runner
# =============================================================================

class ToolkitRunner:
    """
    Executes one RunConfig.

    Analysis commands never modify their input file; everything goes to the
    output directory.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.output_dir = resolve_output_dir(config.output_dir)
        self._input_sha: Optional[str] = None
        self._dims: Optional[List[int]] = None
        self._scenario: Optional[Scenario] = None

    # -------------------------------------------------------------------------
    # Inputs
    # -------------------------------------------------------------------------

    def synth_config(self) -> SynthConfig:
        cfg = self.config
        if cfg.synth_config is not None:
            data = _load_yaml(Path(cfg.synth_config))
            if not isinstance(data, dict):
                raise ConfigError(f"{cfg.synth_config} is not a YAML mapping")
            self._input_sha = hashlib.sha256(Path(cfg.synth_config).read_bytes()).hexdigest()
            return load_synth_config(data.get("synth", data), seed=cfg.seed)
        self._scenario, synth = load_scenario(cfg.preset)
        if cfg.seed is not None:
            synth = synth.model_copy(update={"seed": cfg.seed})
        return synth

    def load_tensor(self) -> ChannelTensor:
        cfg = self.config
        if cfg.input is not None:
            self._input_sha = hashlib.sha256(Path(cfg.input).read_bytes()).hexdigest()
            tensor = read_cht(cfg.input)
        else:
            tensor, _ = synthesize(self.synth_config())
        self._dims = [tensor.n_time, tensor.n_freq, tensor.n_ant]
        return tensor

    def _analysis_default(self, name: str) -> Any:
        value = getattr(self.config, name)
        if value is None and self._scenario is not None:
            value = getattr(self._scenario.analysis, name, None)
        return value

    def condition(self, tensor: ChannelTensor, missing: Optional[str] = None) -> Conditioned:
        """Detect lost samples (merged with any stored flags), then drop or interpolate them."""
        missing = missing or self.config.missing
        mask = detect_lost_samples(tensor, self.config.threshold_db, self.config.window)
        if tensor.lost_mask is not None:
            mask = mask | tensor.lost_mask
        if missing == "interpolate":
            return Conditioned(interpolate_lost(tensor, mask), mask, np.arange(tensor.n_time))
        return Conditioned(drop_lost(tensor, mask), mask, np.flatnonzero(~mask))

    def policy(self, tensor: ChannelTensor) -> SubsetPolicy:
        cfg = self.config
        sizes = self._analysis_default("sizes")
        mode = cfg.subset_mode
        if self._scenario is not None and cfg.subset_mode == SubsetMode.FIRST_K:
            mode = self._scenario.analysis.subset_mode
        if sizes is None:
            limit = tensor.n_ant
            if mode == SubsetMode.POLARIZATION_ONLY:
                limit = len(tensor.layout.indices_with_polarization(cfg.polarization))
            sizes = default_sizes(limit)
        return SubsetPolicy(mode=mode, sizes=tuple(sizes), seed=cfg.seed, polarization=cfg.polarization)

    # -------------------------------------------------------------------------
    # Steps
    # -------------------------------------------------------------------------

    def _path(self, name: str) -> Path:
        return self.output_dir / name

    def step_synth(self) -> _Step:
        synth = self.synth_config()
        tensor, truth = synthesize(synth)
        self._dims = list(synth.dims)
        step = _Step()
        step.artifacts.append(write_cht(tensor, self._path("tensor.cht")).name)
        step.artifacts.append(write_csv(self._path("truth_mask.csv"), mask_rows(truth), ["n", "lost"]).name)
        step.artifacts.append(write_yaml(self._path("synth.yaml"), synth.model_dump(mode="json")).name)
        step.summary["synth"] = {"dims": list(synth.dims), "seed": synth.seed, "lost_samples": int(truth.sum())}
        return step

    def step_qc(self, tensor: ChannelTensor) -> _Step:
        cfg = self.config
        max_lag = self._analysis_default("max_lag") or 10
        report = qc_report(
            tensor,
            max_lag=max_lag,
            threshold_db=cfg.threshold_db,
            window=cfg.window,
            envelope=cfg.envelope,
            ue_speed_mps=self._analysis_default("ue_speed_mps"),
        )
        step = _Step()
        step.artifacts.append(write_yaml(self._path("qc.yaml"), report.to_dict()).name)
        step.artifacts.append(write_csv(
            self._path("lost_samples.csv"),
            [{"n": n} for n in report.lost_indices], ["n"],
        ).name)
        step.artifacts.append(write_csv(
            self._path("burst_histogram.csv"),
            [{"length": k, "count": v} for k, v in sorted(report.burst_histogram.items())],
            ["length", "count"],
        ).name)
        if cfg.autocorr_full:
            repaired = interpolate_lost(tensor, np.isin(np.arange(tensor.n_time), report.lost_indices))
            autocorr = time_autocorrelation(repaired, max_lag, envelope=cfg.envelope)
            step.artifacts.append(write_csv(
                self._path("autocorrelation.csv"),
                autocorr_rows(autocorr.magnitude, max_lag), ["lag", "f", "m", "magnitude"],
            ).name)
        step.summary["qc"] = {
            "lost_samples": len(report.lost_indices),
            "decorrelation_lag": report.autocorr_summary,
            "max_ue_speed_mps": report.max_ue_speed_mps,
            "nyquist_ok": report.nyquist_ok,
        }
        return step

    def step_hardening(self, tensor: ChannelTensor) -> _Step:
        clean = self.condition(tensor).tensor
        policy = self.policy(clean)
        curve = hardening_curve(clean, policy)
        reference = iid_reference_curve(policy.sizes)
        largest = select_subset(clean.layout, policy, policy.sizes[-1])
        ids = [clean.antenna_ids[p] for p in largest]

        step = _Step()
        step.artifacts.append(write_csv(
            self._path("hardening.csv"), curve.to_rows(),
            ["size", "std_linear", "std_db", "reference_std_db", "iid_equivalent"],
        ).name)
        per_antenna_std = None
        if clean.n_ant >= 2:
            stats = per_antenna_mean_stats(normalize(clean))
            per_antenna_std = stats.std_db
            step.artifacts.append(write_csv(self._path("per_antenna.csv"), stats.to_rows(), ["antenna", "mean_db"]).name)
        last = curve.points[-1]
        step.summary["hardening"] = {
            "sizes": list(policy.sizes),
            "subset_mode": policy.mode.value,
            "hardening_amount_db": curve.hardening_amount_db,
            "reference_amount_db": reference.hardening_amount_db,
            "std_db_largest": last.std_db,
            "iid_equivalent_antennas": last.iid_equivalent,
            "array_gain_db": array_gain_db(clean, ids),
            "per_antenna_std_db": per_antenna_std,
        }
        step.artifacts.append(write_yaml(self._path("hardening.yaml"), step.summary["hardening"]).name)
        return step

    def step_tails(self, tensor: ChannelTensor) -> _Step:
        cfg = self.config
        clean = self.condition(tensor).tensor
        policy = self.policy(clean)
        dof = dof_curve(clean, policy, cfg.method, cfg.scale_mode)

        ecdf_rows, offsets, unreliable = [], [], 0
        for size in policy.sizes:
            ids = [clean.antenna_ids[p] for p in select_subset(clean.layout, policy, size)]
            dist = ecdf(combined_gain(normalize(clean, ids)))
            ecdf_rows.extend({"size": size, **row} for row in ecdf_table(dist))
            offset = cdf_offset(dist, float(size), cfg.offset_p, cfg.offset_unit)
            unreliable += 0 if offset.reliable else 1
            offsets.append({"size": size, "p": offset.p, "offset": offset.value,
                            "unit": offset.unit, "reliable": offset.reliable})

        step = _Step(unreliable=unreliable)
        step.artifacts.append(write_csv(
            self._path("dof.csv"), dof.to_rows(), ["size", "shape", "scale", "method", "scale_mode"],
        ).name)
        step.artifacts.append(write_csv(self._path("ecdf.csv"), ecdf_rows, ["size", "value", "probability"]).name)
        step.artifacts.append(write_csv(
            self._path("cdf_offset.csv"), offsets, ["size", "p", "offset", "unit", "reliable"],
        ).name)

        summary: Dict[str, Any] = {
            "method": dof.points[-1].fit.method,
            "scale_mode": dof.points[-1].fit.scale_mode,
            "dof_largest": dof.points[-1].fit.shape,
            "scale_largest": dof.points[-1].fit.scale,
        }
        if len(policy.sizes) >= 2:
            summary["shape_slope"] = dof.shape_slope()
        if any(s >= 3 for s in policy.sizes):
            spread = cdf_offset_range(clean, policy, cfg.offset_p, unit=cfg.offset_unit)
            summary["offset_range"] = [spread.minimum, spread.maximum]
            summary["offset_skipped_sizes"] = spread.skipped
        step.summary["tails"] = summary
        step.artifacts.append(write_yaml(self._path("tails.yaml"), summary).name)
        return step

    def step_margin(self, tensor: ChannelTensor) -> _Step:
        clean = self.condition(tensor).tensor
        policy = self.policy(clean)
        table = fading_margin_table(clean, policy, self._analysis_default("p_list"))
        step = _Step(unreliable=table.unreliable_count)
        step.artifacts.append(write_csv(
            self._path("margin.csv"), table.to_rows(),
            ["size", "p", "margin_db", "reliable", "reference_margin_db"],
        ).name)
        smallest_p = min(r.p for r in table.rows)
        row = [r for r in table.rows if r.p == smallest_p][-1]
        step.summary["margin"] = {
            "p": smallest_p,
            "size": row.subset_size,
            "margin_db": row.margin_db,
            "reliable": row.reliable,
            "unreliable_rows": table.unreliable_count,
        }
        return step

    def step_shadowing(self, tensor: ChannelTensor) -> _Step:
        cfg = self.config
        offset = 0
        if cfg.trim_seconds:
            offset = trim_count(tensor, cfg.trim_seconds)
            tensor = trim_leading(tensor, cfg.trim_seconds)
        cond = self.condition(tensor, missing="drop")
        # regression runs on the original time index
        fit = fit_shadowing(cond.tensor, cond.time_index + offset, self._analysis_default("from_sample"))
        lower, upper = normal_tail_excess(fit.residuals, 1e-3, fit.mu_hat, fit.sigma_hat)
        level_mean, level_std = gain_level_stats(fit.series_db)

        step = _Step()
        step.artifacts.append(write_csv(
            self._path("shadowing.csv"), fit.to_rows(), ["n", "g_db", "trend_db", "residual_db"],
        ).name)
        step.artifacts.append(write_csv(
            self._path("residual_cdf.csv"), residual_cdf(fit.residuals, fit.mu_hat, fit.sigma_hat),
            ["residual_db", "ecdf", "normal_cdf"],
        ).name)
        summary = fit.summary()
        summary.update({
            "level_mean_db": level_mean,
            "level_std_db": level_std,
            "tail_excess_lower_db": lower,
            "tail_excess_upper_db": upper,
        })
        step.summary["shadowing"] = summary
        step.artifacts.append(write_yaml(self._path("shadowing.yaml"), summary).name)
        return step

    # -------------------------------------------------------------------------
    # Entry
    # -------------------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.config
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info("%s -> %s", cfg.command.value, self.output_dir)

        if cfg.command == Command.SYNTH:
            step = self.step_synth()
        else:
            tensor = self.load_tensor()
            if cfg.command == Command.REPORT:
                step = _Step()
                for run_step in (self.step_qc, self.step_hardening, self.step_tails,
                                 self.step_margin, self.step_shadowing):
                    step.merge(run_step(tensor))
                step.artifacts.append(write_yaml(self._path("summary.yaml"), step.summary).name)
            else:
                step = {
                    Command.QC: self.step_qc,
                    Command.HARDENING: self.step_hardening,
                    Command.TAILS: self.step_tails,
                    Command.MARGIN: self.step_margin,
                    Command.SHADOWING: self.step_shadowing,
                }[cfg.command](tensor)

        manifest = RunManifest(
            command=cfg.command.value,
            tool_version=sounder.__version__,
            config=cfg.model_dump(mode="json"),
            seed=cfg.seed,
            input_sha256=self._input_sha,
            dims=self._dims,
            artifacts=sorted(step.artifacts),
            unreliable_rows=step.unreliable,
        )
        write_yaml(self._path("manifest.yaml"), to_dict(manifest))

        exit_code = 0
        if step.unreliable:
            logger.warning("%d result rows lack samples for their probability", step.unreliable)
            if cfg.strict:
                exit_code = EXIT_UNRELIABLE
        return RunResult(
            exit_code=exit_code,
            output_dir=str(self.output_dir),
            artifacts=sorted(step.artifacts) + ["manifest.yaml"],
            summary=step.summary,
            unreliable_rows=step.unreliable,
        )


def run(config: RunConfig) -> RunResult:
    """Execute a validated run config."""
    return ToolkitRunner(config).run()
