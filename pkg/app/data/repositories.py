import os
import tempfile
from typing import Dict, List, Sequence

import pandas as pd

from app.domain.node import SensorRecord
from app.engine.metrics import Metrics
from app.engine.state import TraceRecord

TRACE_COLUMNS = [
    "time",
    "node_id",
    "event_kind",
    "phase",
    "stored_J",
    "V_B",
    "harvested_J_cum",
    "decoded_bits_cum",
    "soc",
]
STORAGE_COLUMNS = ["timestamp", "sensor_id", "value"]


def _atomic_write(path: str, write) -> str:
    """Write through a temp file in the same directory, then rename over `path`."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def _write_frame(df: pd.DataFrame, path: str, fmt: str) -> str:
    if fmt == "jsonl":
        return _atomic_write(path, lambda tmp: df.to_json(tmp, orient="records", lines=True, double_precision=15))
    return _atomic_write(path, lambda tmp: df.to_csv(tmp, index=False, float_format="%.12g"))


class TraceRepo:
    @staticmethod
    def to_frame(trace: Sequence[TraceRecord]) -> pd.DataFrame:
        return pd.DataFrame(list(trace), columns=TRACE_COLUMNS)

    @staticmethod
    def save(trace: Sequence[TraceRecord], out_dir: str, fmt: str = "csv") -> str:
        """trace.csv or trace.jsonl, one record per line in event order."""
        path = os.path.join(out_dir, f"trace.{fmt}")
        return _write_frame(TraceRepo.to_frame(trace), path, fmt)


class StorageRepo:
    @staticmethod
    def save(node_id: str, records: Sequence[SensorRecord], out_dir: str) -> str:
        """What the node still holds in its memory at the end of the run."""
        df = pd.DataFrame(
            [(r.timestamp, r.sensor_id, r.value) for r in records],
            columns=STORAGE_COLUMNS,
        )
        return _write_frame(df, os.path.join(out_dir, f"storage_{node_id}.csv"), "csv")


class SummaryRepo:
    @staticmethod
    def save(metrics: Metrics, out_dir: str) -> str:
        path = os.path.join(out_dir, "summary.json")

        def write(tmp):
            with open(tmp, "w") as f:
                f.write(metrics.model_dump_json(indent=2))

        return _atomic_write(path, write)


class SweepRepo:
    @staticmethod
    def save(rows: List[Dict], out_dir: str) -> str:
        """sweep.csv: one row per swept value, in the order the values were given."""
        df = pd.DataFrame(rows)
        return _write_frame(df, os.path.join(out_dir, "sweep.csv"), "csv")
