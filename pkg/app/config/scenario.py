# app/config/scenario.py
"""
Scenario schema.

A scenario file is JSON with the sections `transmitters[]`, `nodes[]`,
`commands`, `policy`, `engine` and `trace`. Physical quantities carry unit
suffixes and are converted to SI here; everything downstream works in SI.
"""

import hashlib
import json
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.config.units import (
    BitsPerSecond,
    Farads,
    Hertz,
    Joules,
    Meters,
    Nanometers,
    PerMeter,
    Radians,
    Seconds,
    SquareMeters,
    Volts,
    Watts,
)
from app.domain.channel import WATER_PRESETS
from app.domain.codec import parse_command
from app.domain.load_profiles import LOAD_PROFILES


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- 1. CHANNEL SECTIONS ---
class WaterSpec(_Section):
    absorption: PerMeter
    scattering: PerMeter

    @field_validator("absorption", "scattering")
    @classmethod
    def _non_negative(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v


class BeamSpec(_Section):
    initial_radius: Meters = 2e-3
    half_angle_divergence: Radians = 0.0


class TurbulenceSpec(_Section):
    scintillation_index: float = 0.0

    @field_validator("scintillation_index")
    @classmethod
    def _non_negative(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v


Position = Tuple[Meters, Meters, Meters]


class TransmitterSpec(_Section):
    id: str
    position: Position = (0.0, 0.0, 0.0)
    tx_power: Watts
    wavelength: Nanometers = 450.0
    water: Union[str, WaterSpec, None] = None
    beam: BeamSpec = Field(default_factory=BeamSpec)
    turbulence: TurbulenceSpec = Field(default_factory=TurbulenceSpec)
    pointing_jitter: Radians = 0.0
    role: Literal["both", "energy", "data"] = "both"
    active: Optional[List[Tuple[Seconds, Seconds]]] = None
    bit_error_rate: float = 0.0

    @field_validator("tx_power")
    @classmethod
    def _power_non_negative(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("bit_error_rate")
    @classmethod
    def _ber_range(cls, v):
        if not 0 <= v <= 0.5:
            raise ValueError("outside [0,0.5]")
        return v

    @field_validator("active")
    @classmethod
    def _windows_ordered(cls, v):
        if v is not None:
            for start, end in v:
                if start < 0 or end <= start:
                    raise ValueError(f"window [{start}, {end}] must satisfy 0 <= start < end")
        return v

    @property
    def carries_data(self) -> bool:
        return self.role != "energy"


# --- 2. NODE SECTIONS ---
class SolarCellSpec(_Section):
    area: SquareMeters = 55e-3 * 70e-3
    efficiency: float = 0.2
    decode_bandwidth: Hertz = 30e3
    decode_rate: BitsPerSecond = 500e3
    sensitivity: Watts = 1e-6
    switch_latency: Seconds = 5e-3
    aperture_radius: Optional[Meters] = None

    @field_validator("efficiency")
    @classmethod
    def _efficiency_range(cls, v):
        if not 0 < v <= 1:
            raise ValueError("outside (0,1]")
        return v

    @field_validator("area")
    @classmethod
    def _area_positive(cls, v):
        if v <= 0:
            raise ValueError("must be > 0")
        return v

    @field_validator("switch_latency", "sensitivity", "decode_rate")
    @classmethod
    def _non_negative(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v


class PhotodiodeSpec(_Section):
    decode_rate: Optional[BitsPerSecond] = None
    sensitivity: Optional[Watts] = None


class BatterySpec(_Section):
    kind: Literal["battery"] = "battery"
    capacity: Joules
    initial: Joules = 0.0
    v_empty: Volts = 3.0
    v_full: Volts = 4.2

    @model_validator(mode="after")
    def _consistent(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be > 0")
        if not 0 <= self.initial <= self.capacity:
            raise ValueError("initial energy outside [0, capacity]")
        if self.v_empty >= self.v_full:
            raise ValueError("v_empty must be below v_full")
        return self


class SupercapacitorSpec(_Section):
    kind: Literal["supercapacitor"] = "supercapacitor"
    capacitance: Farads = 5.0
    rated_voltage: Volts = 5.0
    initial: Joules = 0.0

    @model_validator(mode="after")
    def _consistent(self):
        if self.capacitance <= 0 or self.rated_voltage <= 0:
            raise ValueError("capacitance and rated_voltage must be > 0")
        if not 0 <= self.initial <= 0.5 * self.capacitance * self.rated_voltage ** 2:
            raise ValueError("initial energy above the rated charge")
        return self


StoreSpec = Annotated[Union[BatterySpec, SupercapacitorSpec], Field(discriminator="kind")]


class SensorSpec(_Section):
    id: int
    kind: Literal["temperature", "turbidity"] = "temperature"
    enabled: bool = True
    value: float = 0.0
    replay: Optional[List[Tuple[Seconds, float]]] = None
    replay_file: Optional[str] = None

    @field_validator("id")
    @classmethod
    def _one_byte(cls, v):
        if not 0 <= v <= 255:
            raise ValueError("sensor id must fit in one byte")
        return v


class LoadsSpec(_Section):
    sense: str = "sense_and_save"
    receive: str = "iot_10mhz"
    uplink: str = "soc_3mhz"
    stream: str = "video_streaming"
    sleep_power: Watts = 0.0
    sample_cost: Seconds = 2.0
    uplink_rate: Optional[BitsPerSecond] = None
    record_bits: int = 96

    @field_validator("sense", "receive", "uplink", "stream")
    @classmethod
    def _known_profile(cls, v):
        if v not in LOAD_PROFILES:
            raise ValueError(f"unknown load profile '{v}'")
        return v

    @field_validator("sleep_power", "sample_cost")
    @classmethod
    def _non_negative(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v


# --- 3. POLICY / ENGINE / TRACE ---
class PolicySpec(_Section):
    scheme: Literal["protocol", "time_switching", "power_splitting", "spatial", "dual_wavelength"] = "protocol"
    t1: Seconds = 1.0
    t2: Seconds = 1.0
    phase_offset: Seconds = 0.0
    alpha: float = 0.5
    energy_wavelength: Optional[Nanometers] = None
    data_wavelength: Optional[Nanometers] = None

    @field_validator("alpha")
    @classmethod
    def _alpha_range(cls, v):
        if not 0 <= v <= 1:
            raise ValueError("outside [0,1]")
        return v

    @field_validator("t1", "t2")
    @classmethod
    def _slot_non_negative(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @model_validator(mode="after")
    def _schedule_and_plan(self):
        if self.t1 + self.t2 <= 0:
            raise ValueError("schedule needs t1 + t2 > 0")
        if self.scheme == "dual_wavelength":
            if self.energy_wavelength is None or self.data_wavelength is None:
                raise ValueError("dual_wavelength needs energy_wavelength and data_wavelength")
            if self.energy_wavelength == self.data_wavelength:
                raise ValueError("energy_wavelength and data_wavelength must differ")
        return self


class NodeSpec(_Section):
    id: str
    position: Position = (0.0, 0.0, 0.0)
    solar_cell: SolarCellSpec = Field(default_factory=SolarCellSpec)
    photodiode: Optional[PhotodiodeSpec] = None
    store: StoreSpec
    v_threshold: Volts = 3.6
    sensors: List[SensorSpec] = Field(default_factory=list)
    loads: LoadsSpec = Field(default_factory=LoadsSpec)
    stream_duration: Seconds = 0.0
    rx_timeout: Seconds = 60.0
    data_demand: bool = True
    serving: Optional[List[str]] = None
    policy: Optional[PolicySpec] = None

    @field_validator("rx_timeout")
    @classmethod
    def _timeout_positive(cls, v):
        if v <= 0:
            raise ValueError("must be > 0")
        return v


class EngineSpec(_Section):
    slot: Seconds = 1.0
    wake_interval: Optional[Seconds] = None
    max_events: int = 5_000_000

    @field_validator("slot")
    @classmethod
    def _slot_positive(cls, v):
        if v <= 0:
            raise ValueError("must be > 0")
        return v

    @field_validator("wake_interval")
    @classmethod
    def _wake_positive(cls, v):
        if v is not None and v <= 0:
            raise ValueError("must be > 0")
        return v


class TraceSpec(_Section):
    format: Literal["csv", "jsonl"] = "csv"
    enabled: bool = True


class ScenarioSpec(_Section):
    name: str = "scenario"
    notes: List[str] = Field(default_factory=list)
    duration: Seconds
    seed: Optional[int] = None
    water: Union[str, WaterSpec] = "clear_ocean"
    water_presets: Dict[str, WaterSpec] = Field(default_factory=dict)
    wavelength_water: Dict[str, Union[str, WaterSpec]] = Field(default_factory=dict)
    transmitters: List[TransmitterSpec] = Field(default_factory=list)
    nodes: List[NodeSpec] = Field(default_factory=list)
    commands: Dict[str, List[str]] = Field(default_factory=dict)
    policy: PolicySpec = Field(default_factory=PolicySpec)
    engine: EngineSpec = Field(default_factory=EngineSpec)
    trace: TraceSpec = Field(default_factory=TraceSpec)

    @field_validator("duration")
    @classmethod
    def _duration_positive(cls, v):
        if v <= 0:
            raise ValueError("must be > 0")
        return v

    @field_validator("seed")
    @classmethod
    def _seed_64bit(cls, v):
        if v is not None and not 0 <= v < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return v

    @field_validator("commands")
    @classmethod
    def _parse_scripts(cls, v):
        for node_id, script in v.items():
            for i, text in enumerate(script):
                try:
                    parse_command(text)
                except ValueError as e:
                    raise ValueError(f"commands.{node_id}.{i}: {e}")
        return v

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def scenario_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


# ==========================================
# VALIDATION REPORT
# ==========================================
class Violation(BaseModel):
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path} {self.message}" if self.path else self.message


def _dotted(loc) -> str:
    # Drop discriminator tags pydantic inserts for tagged unions
    parts = [str(p) for p in loc if p not in ("battery", "supercapacitor")]
    return ".".join(parts)


def violations_from(error: ValidationError) -> List[Violation]:
    found = []
    for item in error.errors():
        message = item["msg"]
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        found.append(Violation(path=_dotted(item["loc"]), message=message))
    return found


def referential_violations(spec: ScenarioSpec, seed_override: Optional[int] = None) -> List[Violation]:
    """Checks that span sections (ids, references, seed)."""
    found = []

    # 1. Unique ids
    for section, items in (("transmitters", spec.transmitters), ("nodes", spec.nodes)):
        seen = set()
        for i, item in enumerate(items):
            if item.id in seen:
                found.append(Violation(path=f"{section}.{i}.id", message=f"duplicate id '{item.id}'"))
            seen.add(item.id)

    # 2. References
    tx_ids = {t.id for t in spec.transmitters}
    node_ids = {n.id for n in spec.nodes}
    for i, node in enumerate(spec.nodes):
        for ref in node.serving or []:
            if ref not in tx_ids:
                found.append(Violation(path=f"nodes.{i}.serving", message=f"unknown transmitter '{ref}'"))
        sensor_ids = [s.id for s in node.sensors]
        if len(sensor_ids) != len(set(sensor_ids)):
            found.append(Violation(path=f"nodes.{i}.sensors", message="duplicate sensor id"))
    for node_id in spec.commands:
        if node_id not in node_ids:
            found.append(Violation(path=f"commands.{node_id}", message="unknown node"))

    # 3. Water references
    known_water = set(spec.water_presets) | set(WATER_PRESETS)
    if isinstance(spec.water, str) and spec.water not in known_water:
        found.append(Violation(path="water", message=f"unknown water preset '{spec.water}'"))
    for i, tx in enumerate(spec.transmitters):
        if isinstance(tx.water, str) and tx.water not in known_water:
            found.append(Violation(path=f"transmitters.{i}.water", message=f"unknown water preset '{tx.water}'"))
    for key, water in spec.wavelength_water.items():
        if isinstance(water, str) and water not in known_water:
            found.append(Violation(path=f"wavelength_water.{key}", message=f"unknown water preset '{water}'"))

    # 4. Determinism needs a seed from somewhere
    if seed_override is None and spec.seed is None:
        found.append(Violation(path="seed", message="missing (pass --seed or set seed in the scenario)"))
    return found
