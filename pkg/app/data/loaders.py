import json
import logging
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.config.scenario import ScenarioSpec, Violation, referential_violations, violations_from

logger = logging.getLogger(__name__)

# Setup paths
BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
SAMPLES_DIR = os.path.join(BASE_DIR, "data_samples")


def resolve_scenario_path(name_or_path: str) -> str:
    """
    A path on disk wins; otherwise `name_or_path` is looked up among the
    bundled scenarios in data_samples/ (with or without the .json suffix).
    """
    if os.path.isfile(name_or_path):
        return os.path.abspath(name_or_path)
    stem = name_or_path[:-5] if name_or_path.endswith(".json") else name_or_path
    bundled = os.path.join(SAMPLES_DIR, f"{stem}.json")
    if os.path.isfile(bundled):
        return bundled
    raise FileNotFoundError(f"scenario '{name_or_path}' is neither a file nor a bundled scenario")


def load_raw(path: str) -> Dict[str, Any]:
    with open(path, "r") as f:
        return json.load(f)


def validate_raw(
    raw: Dict[str, Any], seed_override: Optional[int] = None
) -> Tuple[Optional[ScenarioSpec], List[Violation]]:
    """Schema checks first, cross-section checks only once the schema holds."""
    try:
        spec = ScenarioSpec.model_validate(raw)
    except ValidationError as e:
        return None, violations_from(e)
    found = referential_violations(spec, seed_override)
    return (spec if not found else None), found


def load_scenario(
    name_or_path: str, seed_override: Optional[int] = None
) -> Tuple[Optional[ScenarioSpec], List[Violation], str]:
    path = resolve_scenario_path(name_or_path)
    logger.info(f"📂 Loading scenario from {path}")
    spec, found = validate_raw(load_raw(path), seed_override)
    return spec, found, os.path.dirname(path)


def load_replay(path: str, base_dir: Optional[str] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sensor replay table: a CSV with `time_s` (or `time`) and `value` columns.
    Relative paths resolve against the scenario file's directory.
    """
    if base_dir and not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    df = pd.read_csv(path)
    time_col = "time_s" if "time_s" in df.columns else "time"
    if time_col not in df.columns or "value" not in df.columns:
        raise ValueError(f"replay file {path} needs time_s and value columns, got {list(df.columns)}")
    df = df.sort_values(time_col, kind="stable")
    logger.debug(f"replay {path}: {len(df)} samples")
    return df[time_col].to_numpy(dtype=float), df["value"].to_numpy(dtype=float)
