# coding=utf-8
"""
Pytest configuration and shared fixtures for haptic-ring tests.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

FIXTURE_SEED = 42


@pytest.fixture(scope="session")
def archetype_recordings():
    """All six generated archetype recordings, keyed by texture name."""
    from haptic_ring.const import Archetype
    from haptic_ring.texdata import generate_fixture

    return {kind.value: generate_fixture(kind, FIXTURE_SEED) for kind in Archetype}


@pytest.fixture(scope="session")
def fixture_set(tmp_path_factory):
    """Fixture recordings written to disk: (directory, name -> manifest path)."""
    from haptic_ring.texdata import write_fixture_set

    directory = tmp_path_factory.mktemp("fixtures")
    return directory, write_fixture_set(directory, FIXTURE_SEED)


@pytest.fixture(scope="session")
def rendered_commands(archetype_recordings):
    """CommandSet per archetype, rendered with default settings over the whole set."""
    from haptic_ring.commands import render_commands
    from haptic_ring.roughness import RoughnessConfig
    from haptic_ring.softness import SoftnessConfig, analyze_press, compute_slope_range
    from haptic_ring.thermal import ThermalConfig

    softness = SoftnessConfig()
    slope_range = compute_slope_range(
        [analyze_press(rec, softness)[1].press_slope for rec in archetype_recordings.values()])
    return {
        name: render_commands(rec, softness, ThermalConfig(), RoughnessConfig(), slope_range)
        for name, rec in archetype_recordings.items()
    }


@pytest.fixture
def run_config(tmp_path):
    """Default RunConfig rooted at a temporary directory."""
    from haptic_ring.utils.read_config import default_run_config

    return default_run_config(str(tmp_path))


@pytest.fixture
def make_series():
    """Build a uniformly sampled TimeSeries from values."""
    from haptic_ring.const import Unit
    from haptic_ring.texdata import TimeSeries

    def _make(values, rate=100.0, unit=Unit.NEWTON, start=0.0):
        values = np.asarray(values, dtype=np.float64)
        return TimeSeries(start + np.arange(len(values)) / rate, values, unit)

    return _make
