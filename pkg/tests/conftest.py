import copy
import json
import os
import sys

import pytest

# Add project root to python path so imports work
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.config.scenario import ScenarioSpec  # noqa: E402

# Lossless water + capture 1 + efficiency 1: harvested power == tx_power
BASE_SCENARIO = {
    "name": "bench",
    "duration": "1h",
    "seed": 1,
    "water": "lossless",
    "water_presets": {"lossless": {"absorption": "0/m", "scattering": "0/m"}},
    "transmitters": [
        {"id": "tx", "position": [0, 0, 0], "tx_power": "100mW", "wavelength": "450nm"},
    ],
    "nodes": [
        {
            "id": "n1",
            "position": [0, 0, "1m"],
            "solar_cell": {"efficiency": 1.0, "switch_latency": "0s"},
            "store": {"kind": "battery", "capacity": "100J"},
            "v_threshold": "100V",
        }
    ],
    "policy": {"scheme": "protocol"},
}


@pytest.fixture
def raw_scenario():
    """A fresh, mutable copy of the single-link bench scenario."""
    return copy.deepcopy(BASE_SCENARIO)


@pytest.fixture
def make_spec():
    def _make(raw=None, **overrides) -> ScenarioSpec:
        data = copy.deepcopy(raw if raw is not None else BASE_SCENARIO)
        data.update(overrides)
        return ScenarioSpec.model_validate(data)

    return _make


@pytest.fixture
def write_scenario(tmp_path):
    def _write(raw, name="scenario.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(raw))
        return str(path)

    return _write
