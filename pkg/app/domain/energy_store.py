# app/domain/energy_store.py
"""
Battery and supercapacitor bookkeeping under constant-power charging.
"""

import math
from dataclasses import dataclass, replace
from typing import Tuple, Union

from app.domain.errors import DomainError, NeverFullError

JOULES_PER_MWH = 3.6


@dataclass(frozen=True)
class Battery:
    capacity: float
    stored: float = 0.0
    v_empty: float = 3.0
    v_full: float = 4.2

    def __post_init__(self):
        if self.capacity <= 0:
            raise DomainError(f"battery capacity must be > 0, got {self.capacity}")
        if not 0 <= self.stored <= self.capacity:
            raise DomainError(f"stored energy {self.stored} outside [0, {self.capacity}]")
        if self.v_empty >= self.v_full:
            raise DomainError("v_empty must be below v_full")

    @classmethod
    def from_mwh(cls, capacity_mwh: float, **kwargs) -> "Battery":
        return cls(capacity=capacity_mwh * JOULES_PER_MWH, **kwargs)


@dataclass(frozen=True)
class Supercapacitor:
    capacitance: float = 5.0
    rated_voltage: float = 5.0
    stored: float = 0.0

    def __post_init__(self):
        if self.capacitance <= 0 or self.rated_voltage <= 0:
            raise DomainError("capacitance and rated voltage must be > 0")
        if not 0 <= self.stored <= self.capacity:
            raise DomainError(f"stored energy {self.stored} outside [0, {self.capacity}]")

    @property
    def capacity(self) -> float:
        return 0.5 * self.capacitance * self.rated_voltage ** 2


EnergyStore = Union[Battery, Supercapacitor]


def capacity(store: EnergyStore) -> float:
    return store.capacity


def state_of_charge(store: EnergyStore) -> float:
    return store.stored / store.capacity


def is_full(store: EnergyStore) -> bool:
    return store.stored >= store.capacity


def integrate(store: EnergyStore, net_power: float, dt: float) -> Tuple[EnergyStore, float]:
    """
    Apply `net_power` for `dt` seconds, clamped to [0, capacity].

    Returns the new store and the energy actually moved: positive when absorbed,
    negative when drained.
    """
    if dt < 0:
        raise DomainError(f"dt must be >= 0, got {dt}")
    target = store.stored + net_power * dt
    stored = min(max(target, 0.0), store.capacity)
    return replace(store, stored=stored), stored - store.stored


def terminal_voltage(store: EnergyStore) -> float:
    if isinstance(store, Battery):
        soc = store.stored / store.capacity
        return store.v_empty + (store.v_full - store.v_empty) * soc
    return math.sqrt(2.0 * store.stored / store.capacitance)


def time_to_full(store: EnergyStore, net_power: float) -> float:
    if net_power <= 0:
        raise NeverFullError(f"store never fills at net power {net_power} W")
    return (store.capacity - store.stored) / net_power
