# app/domain/node.py
"""
Self-powered sensor module protocol.

The module wakes when light reaches the solar panel and measures its battery:
  - below the threshold it samples its sensors, stores the records and sleeps;
  - at or above the threshold the panel becomes a receiver, the module executes
    the commands it gets, then switches back to harvesting and sleeps once full.

`step` is a pure transition function; the engine interprets the returned actions.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Tuple, Union

from app.domain.codec import Command, Opcode
from app.domain.harvester import CellMode

logger = logging.getLogger(__name__)


class Phase(str, Enum):
    SLEEP = "Sleep"
    WAKE_CHECK = "WakeCheck"
    SENSE_SAVE = "SenseSave"
    COMMAND_RX = "CommandRx"
    HARVEST = "Harvest"
    STREAM = "Stream"


# --- STIMULI ---
@dataclass(frozen=True)
class LightDetected:
    v_b: float


@dataclass(frozen=True)
class SenseComplete:
    pass


@dataclass(frozen=True)
class CommandsComplete:
    pass


@dataclass(frozen=True)
class FullCharge:
    pass


@dataclass(frozen=True)
class Timeout:
    pass


Stimulus = Union[LightDetected, SenseComplete, CommandsComplete, FullCharge, Timeout]


# --- ACTIONS ---
class ActionKind(str, Enum):
    MEASURE_BATTERY = "measure_battery"
    SWITCH_CELL = "switch_cell"
    START_SENSING = "start_sensing"
    OPEN_RECEIVER = "open_receiver"
    AWAIT_FULL_CHARGE = "await_full_charge"
    START_STREAM = "start_stream"
    SLEEP = "sleep"
    TRANSMIT = "transmit"
    RETRANSMIT = "retransmit"
    PROTOCOL_ERROR = "protocol_error"
    WARNING = "warning"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    mode: Union[CellMode, None] = None
    sensors: Tuple[int, ...] = ()
    detail: str = ""


@dataclass(frozen=True)
class SensorRecord:
    timestamp: float
    sensor_id: int
    value: float


@dataclass(frozen=True)
class PhaseLoads:
    """Load profile names per active phase (Table 1 catalog keys)."""

    sense: str = "sense_and_save"
    receive: str = "iot_10mhz"
    uplink: str = "soc_3mhz"
    stream: str = "video_streaming"
    idle: str = "sleep"

    def for_phase(self, phase: Phase) -> str:
        return {
            Phase.SENSE_SAVE: self.sense,
            Phase.COMMAND_RX: self.receive,
            Phase.STREAM: self.stream,
        }.get(phase, self.idle)


@dataclass(frozen=True)
class NodeState:
    phase: Phase = Phase.SLEEP
    v_threshold: float = 3.6
    pending_commands: Tuple[Command, ...] = ()
    storage: Tuple[SensorRecord, ...] = ()
    enabled_sensors: frozenset = field(default_factory=frozenset)
    loads: PhaseLoads = field(default_factory=PhaseLoads)
    active_load: str = "sleep"
    stream_duration: float = 0.0
    protocol_errors: int = 0


def _enter(state: NodeState, phase: Phase, **changes) -> NodeState:
    return replace(state, phase=phase, active_load=state.loads.for_phase(phase), **changes)


# ==========================================
# STATE MACHINE
# ==========================================
def step(state: NodeState, stimulus: Stimulus) -> Tuple[NodeState, List[Action]]:
    phase = state.phase

    if phase is Phase.SLEEP and isinstance(stimulus, LightDetected):
        return _enter(state, Phase.WAKE_CHECK), [Action(ActionKind.MEASURE_BATTERY)]

    if phase is Phase.WAKE_CHECK and isinstance(stimulus, LightDetected):
        if stimulus.v_b >= state.v_threshold:
            return _enter(state, Phase.COMMAND_RX), [
                Action(ActionKind.SWITCH_CELL, mode=CellMode.PHOTOCONDUCTIVE),
                Action(ActionKind.OPEN_RECEIVER),
            ]
        sensors = tuple(sorted(state.enabled_sensors))
        return _enter(state, Phase.SENSE_SAVE), [
            Action(ActionKind.START_SENSING, sensors=sensors)
        ]

    if phase is Phase.SENSE_SAVE and isinstance(stimulus, SenseComplete):
        return _enter(state, Phase.SLEEP), [Action(ActionKind.SLEEP)]

    if phase is Phase.COMMAND_RX and isinstance(stimulus, (CommandsComplete, Timeout)):
        return _enter(state, Phase.HARVEST, pending_commands=()), [
            Action(ActionKind.SWITCH_CELL, mode=CellMode.PHOTOVOLTAIC),
            Action(ActionKind.AWAIT_FULL_CHARGE),
        ]

    if phase is Phase.HARVEST and isinstance(stimulus, FullCharge):
        if state.stream_duration > 0:
            return _enter(state, Phase.STREAM), [Action(ActionKind.START_STREAM)]
        return _enter(state, Phase.SLEEP), [Action(ActionKind.SLEEP)]

    if phase is Phase.STREAM and isinstance(stimulus, Timeout):
        return _enter(state, Phase.SLEEP), [Action(ActionKind.SLEEP)]

    # Invalid for this phase: stay put and report
    detail = f"{type(stimulus).__name__} not valid in {phase.value}"
    logger.debug(detail)
    return replace(state, protocol_errors=state.protocol_errors + 1), [
        Action(ActionKind.PROTOCOL_ERROR, detail=detail)
    ]


def apply_command(state: NodeState, cmd: Command) -> Tuple[NodeState, List[Action]]:
    """Execute one decoded downlink command."""
    if cmd.opcode is Opcode.SENSOR_ON:
        return replace(state, enabled_sensors=state.enabled_sensors | {cmd.sensor_id}), []
    if cmd.opcode is Opcode.SENSOR_OFF:
        return replace(state, enabled_sensors=state.enabled_sensors - {cmd.sensor_id}), []
    if cmd.opcode is Opcode.SEND_DATA:
        return state, [Action(ActionKind.TRANSMIT)]
    return state, [Action(ActionKind.RETRANSMIT)]


def record_sensor(
    state: NodeState, sensor_id: int, value: float, timestamp: float
) -> Tuple[NodeState, List[Action]]:
    if sensor_id not in state.enabled_sensors:
        return state, [Action(ActionKind.WARNING, detail=f"sensor {sensor_id} is disabled; sample dropped")]
    if state.storage and timestamp < state.storage[-1].timestamp:
        raise ValueError(f"record at t={timestamp} is older than the last stored record")
    record = SensorRecord(timestamp=timestamp, sensor_id=sensor_id, value=value)
    # O(n) tuple copy per sample; acknowledged uplinks empty the memory
    return replace(state, storage=state.storage + (record,)), []


def acknowledge_transmission(state: NodeState, count: int) -> NodeState:
    """Drop the oldest `count` records once the uplink has been acknowledged."""
    return replace(state, storage=state.storage[count:])
