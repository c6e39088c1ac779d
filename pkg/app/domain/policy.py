# app/domain/policy.py
"""
SLIPT resource-allocation schemes.

  - time switching: the solar cell alternates harvest (t1) and decode (t2) slots,
    either on a fixed schedule or driven by the node protocol;
  - power splitting: a fraction alpha of the incident power is harvested, the rest decoded;
  - spatial splitting: each transmitter is either an energy or a data source;
  - dual wavelength: one wavelength carries energy, another carries data.

Policy objects turn per-transmitter received power into (harvest, decode) shares.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Dict, FrozenSet, Mapping, Optional, Sequence, Set, Tuple

from app.domain.channel import WaterProperties
from app.domain.errors import ConfigError
from app.domain.harvester import CellMode

logger = logging.getLogger(__name__)


# ==========================================
# TIME SWITCHING
# ==========================================
@dataclass(frozen=True)
class TimeSwitchSchedule:
    t1: float
    t2: float
    phase_offset: float = 0.0

    def __post_init__(self):
        if self.t1 < 0 or self.t2 < 0:
            raise ConfigError("policy", "t1 and t2 must be >= 0")
        if self.t1 + self.t2 <= 0:
            raise ConfigError("policy", "t1 + t2 must be > 0")

    @property
    def period(self) -> float:
        return self.t1 + self.t2

    @property
    def duty_cycle(self) -> float:
        return self.t1 / self.period


def _periods(schedule: TimeSwitchSchedule, t: float) -> Tuple[int, float]:
    """(index of the current period, offset into it)."""
    shifted = t - schedule.phase_offset
    k = math.floor(shifted / schedule.period)
    return k, shifted - k * schedule.period


def _position(schedule: TimeSwitchSchedule, t: float) -> Tuple[float, float]:
    """(start of the current period, offset into it)."""
    k, offset = _periods(schedule, t)
    return k * schedule.period + schedule.phase_offset, offset


def mode_at(schedule: TimeSwitchSchedule, t: float) -> CellMode:
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    _, offset = _position(schedule, t)
    return CellMode.PHOTOVOLTAIC if offset < schedule.t1 else CellMode.PHOTOCONDUCTIVE


def next_mode_change(schedule: TimeSwitchSchedule, t: float) -> Optional[float]:
    """First instant after t where the mode flips; None for one-mode schedules."""
    if schedule.t1 == 0 or schedule.t2 == 0:
        return None
    start, offset = _position(schedule, t)
    if offset < schedule.t1:
        return start + schedule.t1
    return start + schedule.period


def next_decode_window(schedule: TimeSwitchSchedule, t: float, length: float) -> Optional[float]:
    """Earliest start >= t such that [start, start + length) is entirely a decode slot."""
    if schedule.t2 < length:
        return None
    if schedule.t1 == 0:
        return t
    start, offset = _position(schedule, t)
    if offset >= schedule.t1 and (start + schedule.period) - t >= length:
        return t
    if offset < schedule.t1:
        return start + schedule.t1
    return start + schedule.period + schedule.t1


def photovoltaic_time(schedule: TimeSwitchSchedule, start: float, end: float) -> float:
    """Seconds spent harvesting in [start, end)."""

    def cumulative(t: float) -> float:
        whole, offset = _periods(schedule, t)
        return whole * schedule.t1 + min(offset, schedule.t1)

    return cumulative(end) - cumulative(start)


# ==========================================
# POWER SPLITTING
# ==========================================
@dataclass(frozen=True)
class PowerSplit:
    alpha: float

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ConfigError("policy.alpha", "outside [0,1]")


def split(ps: PowerSplit, incident: float) -> Tuple[float, float]:
    if incident < 0:
        raise ValueError(f"incident power must be >= 0, got {incident}")
    harvest = ps.alpha * incident
    # Decode share is the remainder so the two always add back to the input
    return harvest, incident - harvest


# ==========================================
# SPATIAL SPLITTING
# ==========================================
class Role(str, Enum):
    ENERGY = "Energy"
    DATA = "Data"


@dataclass(frozen=True)
class SpatialAssignment:
    roles: Dict[str, Role]
    mapping: Dict[str, FrozenSet[str]]
    infeasible: Tuple[str, ...] = ()

    def data_sources(self, receiver: str) -> FrozenSet[str]:
        return frozenset(t for t in self.mapping.get(receiver, ()) if self.roles[t] is Role.DATA)

    def energy_sources(self, receiver: str) -> FrozenSet[str]:
        return frozenset(t for t in self.mapping.get(receiver, ()) if self.roles[t] is Role.ENERGY)


LinkTable = Mapping[Tuple[str, str], float]


def _feasible(link_power: LinkTable, tx: str, rx: str, demand: float) -> bool:
    power = link_power.get((tx, rx), 0.0)
    return power > 0 and power >= demand


def _build_mapping(
    transmitters: Sequence[str],
    receivers: Sequence[str],
    roles: Mapping[str, Role],
    link_power: LinkTable,
    demands: Mapping[str, float],
    data_capable: Optional[Set[str]] = None,
) -> Tuple[Dict[str, FrozenSet[str]], Tuple[str, ...]]:
    mapping, infeasible = {}, []
    for rx in receivers:
        sources = {t for t in transmitters if roles[t] is Role.ENERGY and link_power.get((t, rx), 0.0) > 0}
        if rx in demands:
            data = [
                t
                for t in transmitters
                if roles[t] is Role.DATA
                and (data_capable is None or t in data_capable)
                and _feasible(link_power, t, rx, demands[rx])
            ]
            if data:
                # Strongest feasible data link, lowest id on ties
                sources.add(min(data, key=lambda t: (-link_power[(t, rx)], t)))
            else:
                infeasible.append(rx)
        mapping[rx] = frozenset(sources)
    return mapping, tuple(infeasible)


def harvested_total(assignment: SpatialAssignment, link_power: LinkTable) -> float:
    return sum(
        link_power.get((t, rx), 0.0)
        for rx, sources in assignment.mapping.items()
        for t in sources
        if assignment.roles[t] is Role.ENERGY
    )


def assign_spatial(
    transmitters: Sequence[str],
    receivers: Sequence[str],
    link_power: LinkTable,
    demands: Mapping[str, float],
    data_capable: Optional[Set[str]] = None,
) -> SpatialAssignment:
    """
    Greedy role assignment.

    1. Receivers with a data demand (in id order) reuse an existing Data transmitter
       they can decode, else promote their strongest feasible unassigned transmitter.
    2. Every remaining transmitter becomes an Energy source.

    `demands` maps receiver id -> minimum received power (W) for decoding;
    `data_capable` restricts which transmitters may take the Data role.
    """
    if not transmitters:
        raise ConfigError("transmitters", "spatial assignment needs at least one transmitter")
    txs, rxs = sorted(transmitters), sorted(receivers)
    capable = set(txs) if data_capable is None else set(data_capable)
    roles: Dict[str, Role] = {}

    for rx in rxs:
        if rx not in demands:
            continue
        shared = [t for t, r in roles.items() if r is Role.DATA and _feasible(link_power, t, rx, demands[rx])]
        if shared:
            continue
        free = [t for t in txs if t not in roles and t in capable and _feasible(link_power, t, rx, demands[rx])]
        if free:
            best = min(free, key=lambda t: (-link_power[(t, rx)], t))
            roles[best] = Role.DATA

    for t in txs:
        roles.setdefault(t, Role.ENERGY)

    mapping, infeasible = _build_mapping(txs, rxs, roles, link_power, demands, capable)
    if infeasible:
        logger.info(f"spatial assignment: no feasible data link for {', '.join(infeasible)}")
    return SpatialAssignment(roles=roles, mapping=mapping, infeasible=infeasible)


def assign_spatial_exhaustive(
    transmitters: Sequence[str],
    receivers: Sequence[str],
    link_power: LinkTable,
    demands: Mapping[str, float],
    data_capable: Optional[Set[str]] = None,
) -> SpatialAssignment:
    """Brute force over all role combinations: fewest infeasible receivers, then most harvested power."""
    txs, rxs = sorted(transmitters), sorted(receivers)
    capable = set(txs) if data_capable is None else set(data_capable)
    best, best_key = None, None
    for combo in product((Role.DATA, Role.ENERGY), repeat=len(txs)):
        roles = dict(zip(txs, combo))
        if any(r is Role.DATA and t not in capable for t, r in roles.items()):
            continue
        mapping, infeasible = _build_mapping(txs, rxs, roles, link_power, demands, capable)
        candidate = SpatialAssignment(roles=roles, mapping=mapping, infeasible=infeasible)
        key = (len(infeasible), -harvested_total(candidate, link_power))
        if best_key is None or key < best_key:
            best, best_key = candidate, key
    return best


def optimality_gap(greedy: SpatialAssignment, optimum: SpatialAssignment, link_power: LinkTable) -> float:
    """Relative harvested-power shortfall of `greedy` against `optimum` (0 when equal)."""
    reference = harvested_total(optimum, link_power)
    if reference == 0:
        return 0.0
    return (reference - harvested_total(greedy, link_power)) / reference


# ==========================================
# DUAL WAVELENGTH
# ==========================================
@dataclass(frozen=True)
class DualWavelengthPlan:
    energy_wavelength: float
    data_wavelength: float
    water: Mapping[float, WaterProperties] = field(default_factory=dict)

    def __post_init__(self):
        if self.energy_wavelength == self.data_wavelength:
            raise ConfigError("policy.data_wavelength", "must differ from energy_wavelength")
        for wl in (self.energy_wavelength, self.data_wavelength):
            if wl not in self.water:
                raise ConfigError("wavelength_water", f"no water properties for {wl:g}nm")
        if self.water[self.energy_wavelength] == self.water[self.data_wavelength]:
            raise ConfigError("wavelength_water", "energy and data wavelengths share one channel parameter set")


# ==========================================
# POLICY OBJECTS (consulted by the engine)
# ==========================================
@dataclass(frozen=True)
class LinkSample:
    tx_id: str
    power: float
    carries_data: bool = True
    wavelength: float = 0.0


@dataclass(frozen=True)
class Routing:
    harvest: float
    decode: float


class SliptPolicy(ABC):
    scheme: str = ""
    # Exclusive schemes share one cell between harvesting and decoding
    exclusive: bool = True

    def cell_mode(self, t: float) -> Optional[CellMode]:
        """Mode imposed by the policy; None means the node protocol decides."""
        return None

    @abstractmethod
    def route(self, receiver: str, links: Sequence[LinkSample], mode: CellMode) -> Routing:
        ...


class ProtocolSwitching(SliptPolicy):
    """Time switching driven by the node state machine."""

    scheme = "protocol"

    def route(self, receiver, links, mode):
        if mode is CellMode.PHOTOVOLTAIC:
            return Routing(sum(l.power for l in links), 0.0)
        return Routing(0.0, sum(l.power for l in links if l.carries_data))


class TimeSwitching(ProtocolSwitching):
    scheme = "time_switching"

    def __init__(self, schedule: TimeSwitchSchedule):
        self.schedule = schedule

    def cell_mode(self, t):
        return mode_at(self.schedule, t)


class PowerSplitting(SliptPolicy):
    scheme = "power_splitting"
    exclusive = False

    def __init__(self, power_split: PowerSplit):
        self.power_split = power_split

    def route(self, receiver, links, mode):
        data_in = sum(l.power for l in links if l.carries_data)
        energy_only = sum(l.power for l in links if not l.carries_data)
        harvest, decode = split(self.power_split, data_in)
        return Routing(harvest + energy_only, decode)


class SpatialSplitting(SliptPolicy):
    scheme = "spatial"
    exclusive = False

    def __init__(self, assignment: SpatialAssignment):
        self.assignment = assignment

    def route(self, receiver, links, mode):
        energy = self.assignment.energy_sources(receiver)
        data = self.assignment.data_sources(receiver)
        return Routing(
            sum(l.power for l in links if l.tx_id in energy),
            sum(l.power for l in links if l.tx_id in data),
        )


class DualWavelength(SliptPolicy):
    scheme = "dual_wavelength"
    exclusive = False

    def __init__(self, plan: DualWavelengthPlan):
        self.plan = plan

    def route(self, receiver, links, mode):
        return Routing(
            sum(l.power for l in links if l.wavelength == self.plan.energy_wavelength),
            sum(l.power for l in links if l.wavelength == self.plan.data_wavelength and l.carries_data),
        )
