"""
Pytest configuration for channel hardening toolkit tests.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


# =============================================================================
# VALIDATION ON TEST RUN
# =============================================================================

def pytest_configure(config):
    """
    Validate the shipped scenario presets before running tests.

    A broken preset surfaces as a collection failure rather than a CLI
    error in the field.
    """
    from mimo.hardening.validation import ConfigError
    from sounder.runner import validate_scenarios

    try:
        validate_scenarios()
    except ConfigError as e:
        pytest.fail(f"Scenario preset validation failed:\n{e}", pytrace=False)


# =============================================================================
# FIXTURES
# =============================================================================

@pytest.fixture(autouse=True)
def default_config():
    """Every test starts from the default toolkit configuration."""
    from mimo.hardening.config import reset_config
    reset_config()
    yield
    reset_config()


@pytest.fixture
def make_synth():
    """Factory for SynthConfig objects with small defaults."""
    from mimo.hardening.synth import load_synth_config

    def _make(n_time=200, n_freq=20, n_ant=16, seed=1, **kwargs):
        return load_synth_config({"n_time": n_time, "n_freq": n_freq, "n_ant": n_ant, "seed": seed, **kwargs})

    return _make


@pytest.fixture
def iid_tensor():
    """i.i.d. Rayleigh tensor with 1e4 (n, f) samples and 100 antennas."""
    from mimo.hardening.synth import gen_iid, load_synth_config
    return gen_iid(load_synth_config({"n_time": 100, "n_freq": 100, "n_ant": 100, "seed": 7}))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """Output directory exposed through HARDENING_OUTPUT_DIR."""
    out = tmp_path / "out"
    monkeypatch.setenv("HARDENING_OUTPUT_DIR", str(out))
    return out
