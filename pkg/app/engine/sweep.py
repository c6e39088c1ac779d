# app/engine/sweep.py
"""
Parameter sweeps: one independent simulation per value of a dotted scenario path.

Cells share nothing (own scenario copy, own RNG registry, own output
directory), so they run on a thread pool and each writes its files atomically.
"""

import copy
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from app.config.scenario import ScenarioSpec, Violation
from app.data.loaders import validate_raw
from app.data.repositories import StorageRepo, SummaryRepo, TraceRepo
from app.domain.errors import ConfigError
from app.engine.simulator import run

logger = logging.getLogger(__name__)


@dataclass
class SweepCell:
    index: int
    value: Any
    spec: ScenarioSpec
    seed: Optional[int]


def parse_values(text: str) -> List[Any]:
    """'0,0.25,1' -> [0, 0.25, 1]; items that are not JSON stay strings ('1.5m')."""
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(json.loads(item))
        except json.JSONDecodeError:
            values.append(item)
    return values


def set_path(raw: Dict[str, Any], dotted: str, value: Any) -> None:
    """Set `raw[a][b][0][c] = value` for 'a.b.0.c'; missing dict levels are created."""
    parts = dotted.split(".")
    target = raw
    for i, part in enumerate(parts[:-1]):
        if isinstance(target, list):
            if not part.isdigit() or int(part) >= len(target):
                raise ConfigError(".".join(parts[: i + 1]), "no such list element")
            target = target[int(part)]
        elif isinstance(target, dict):
            target = target.setdefault(part, {})
        else:
            raise ConfigError(".".join(parts[: i + 1]), "is not a section")

    leaf = parts[-1]
    if isinstance(target, list):
        if not leaf.isdigit() or int(leaf) >= len(target):
            raise ConfigError(dotted, "no such list element")
        target[int(leaf)] = value
    elif isinstance(target, dict):
        target[leaf] = value
    else:
        raise ConfigError(dotted, "is not a section")


def plan_sweep(
    raw: Dict[str, Any], param: str, values: List[Any], seed_override: Optional[int] = None
) -> Tuple[List[SweepCell], List[Violation]]:
    """Build and validate every cell up front; nothing runs if any cell is invalid."""
    if param == "seed" and seed_override is not None:
        raise ConfigError("seed", "conflicting seed sources (--seed together with a sweep over seed)")
    if not values:
        raise ConfigError("--values", "empty value list")

    cells, found = [], []
    for index, value in enumerate(values):
        cell_raw = copy.deepcopy(raw)
        set_path(cell_raw, param, value)
        spec, violations = validate_raw(cell_raw, seed_override)
        if violations:
            found.extend(Violation(path=v.path, message=f"{v.message} (at {param}={value})") for v in violations)
            continue
        cells.append(SweepCell(index=index, value=value, spec=spec, seed=seed_override))
    return cells, found


def _cell_row(param: str, cell: SweepCell, metrics) -> Dict[str, Any]:
    totals = metrics.totals()
    completions = [t for n in metrics.nodes.values() for t in n.charge_completions]
    return {
        param: cell.value,
        "seed": metrics.seed,
        "harvested_J": totals["harvested_J"],
        "consumed_J": totals["consumed_J"],
        "decoded_bits": totals["decoded_bits"],
        "delivered_records": totals["delivered_records"],
        "frame_errors": totals["frame_errors"],
        "first_charge_s": min(completions) if completions else None,
        "events": metrics.events_processed,
    }


def run_sweep(
    cells: List[SweepCell],
    param: str,
    out_dir: str,
    fmt: str = "csv",
    base_dir: Optional[str] = None,
    workers: int = 4,
) -> List[Dict[str, Any]]:
    def run_cell(cell: SweepCell) -> Dict[str, Any]:
        cell_dir = os.path.join(out_dir, f"cell_{cell.index:03d}")
        result = run(cell.spec, seed=cell.seed, base_dir=base_dir)
        if cell.spec.trace.enabled:
            TraceRepo.save(result.trace, cell_dir, fmt)
        SummaryRepo.save(result.metrics, cell_dir)
        for node_id, records in result.storage.items():
            StorageRepo.save(node_id, records, cell_dir)
        logger.info(f"✨ cell {cell.index} ({param}={cell.value}) done")
        return _cell_row(param, cell, result.metrics)

    # ⚡ EXECUTE IN PARALLEL (rows keep the order of the values)
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(cells)))) as executor:
        return list(executor.map(run_cell, cells))
