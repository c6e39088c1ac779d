# app/engine/state.py

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, TypedDict

import numpy as np

from app.domain.channel import LinkParams
from app.domain.codec import Command
from app.domain.energy_store import EnergyStore
from app.domain.harvester import SolarCell
from app.domain.node import NodeState, SensorRecord
from app.domain.policy import SliptPolicy
from app.engine.metrics import NodeMetrics


class TraceRecord(TypedDict):
    time: float
    node_id: str
    event_kind: str
    phase: str
    stored_J: float
    V_B: float
    harvested_J_cum: float
    decoded_bits_cum: float
    soc: float


@dataclass
class SensorSource:
    """Where a sensor's values come from: a constant or a (t, value) replay."""

    sensor_id: int
    value: float = 0.0
    times: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def sample(self, t: float) -> float:
        if self.times is None or len(self.times) == 0:
            return self.value
        return float(np.interp(t, self.times, self.values))


@dataclass
class LinkRuntime:
    tx_id: str
    params: LinkParams
    carries_data: bool
    bit_error_rate: float = 0.0
    fade: float = 1.0
    offset: float = 0.0


@dataclass
class NodeRuntime:
    # --- 1. DOMAIN OBJECTS ---
    node_id: str
    store: EnergyStore
    cell: SolarCell
    state: NodeState
    policy: SliptPolicy
    decoder: Optional[SolarCell] = None
    links: List[LinkRuntime] = field(default_factory=list)
    sensors: Dict[int, SensorSource] = field(default_factory=dict)
    metrics: NodeMetrics = field(default_factory=NodeMetrics)

    # --- 2. PIECEWISE-CONSTANT OPERATING POINT ---
    harvest_w: float = 0.0
    load_w: float = 0.0
    decode_w: float = 0.0
    decoding: bool = False
    t_last: float = 0.0
    cell_ready_at: float = 0.0
    lit: bool = False

    # --- 3. PROTOCOL BOOKKEEPING ---
    sleep_power: float = 0.0
    sample_cost: float = 2.0
    rx_timeout: float = 60.0
    uplink_rate: float = 115.2e3
    uplink_power: float = 0.0
    record_bits: int = 96
    script: List[Command] = field(default_factory=list)
    frames: List[Tuple[Command, bytes]] = field(default_factory=list)
    sense_queue: List[int] = field(default_factory=list)
    last_batch: Tuple[SensorRecord, ...] = ()
    uplinking: bool = False
    charge_token: int = 0
    rx_token: int = 0
    was_full: bool = False

    @property
    def decode_receiver(self) -> SolarCell:
        return self.decoder if self.decoder is not None else self.cell
