# app/domain/harvester.py
"""
Solar cell receiver with two exclusive operating modes.

Photovoltaic mode sources power into the energy store, photoconductive mode
(reverse biased, behind a transimpedance amplifier) decodes the light signal.
A low-power relay moves the cell between the two.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

from app.domain.errors import DomainError, ModeViolationError

logger = logging.getLogger(__name__)


class CellMode(str, Enum):
    PHOTOVOLTAIC = "Photovoltaic"
    PHOTOCONDUCTIVE = "Photoconductive"


@dataclass(frozen=True)
class SolarCell:
    area: float = 55e-3 * 70e-3
    conversion_efficiency: float = 0.2
    decode_bandwidth: float = 30e3
    decode_rate: float = 500e3
    sensitivity: float = 1e-6
    mode: CellMode = CellMode.PHOTOVOLTAIC
    switch_latency: float = 5e-3
    aperture_radius: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.conversion_efficiency <= 1:
            raise DomainError(f"conversion efficiency must be in (0, 1], got {self.conversion_efficiency}")
        if self.area <= 0:
            raise DomainError(f"cell area must be > 0, got {self.area}")
        if self.switch_latency < 0:
            raise DomainError(f"switch latency must be >= 0, got {self.switch_latency}")
        if self.decode_rate < 0 or self.sensitivity < 0:
            raise DomainError("decode rate and sensitivity must be >= 0")

    @property
    def effective_aperture_radius(self) -> float:
        # Equal-area disc unless an explicit aperture is configured
        if self.aperture_radius is not None:
            return self.aperture_radius
        return math.sqrt(self.area / math.pi)


def photodetector(decode_rate: float, sensitivity: float, area: float = 55e-3 * 70e-3) -> SolarCell:
    """A decode-only receiver that never leaves photoconductive mode."""
    return SolarCell(
        area=area,
        conversion_efficiency=1.0,
        decode_rate=decode_rate,
        sensitivity=sensitivity,
        mode=CellMode.PHOTOCONDUCTIVE,
        switch_latency=0.0,
    )


def harvest_power(cell: SolarCell, incident: float) -> float:
    if cell.mode is not CellMode.PHOTOVOLTAIC:
        raise ModeViolationError("harvest_power called while the cell is decoding")
    if incident < 0:
        raise DomainError(f"incident power must be >= 0, got {incident}")
    return cell.conversion_efficiency * incident


def decode_throughput(cell: SolarCell, incident: float, duration: float) -> float:
    """Bits delivered over `duration`; zero below sensitivity (outage)."""
    if cell.mode is not CellMode.PHOTOCONDUCTIVE:
        raise ModeViolationError("decode_throughput called while the cell is harvesting")
    if duration < 0:
        raise DomainError(f"duration must be >= 0, got {duration}")
    if incident < cell.sensitivity:
        return 0.0
    return cell.decode_rate * duration


def switch_mode(cell: SolarCell, target_mode: CellMode, now: float) -> Tuple[SolarCell, float]:
    """Flip the relay; the cell is unusable until the returned ready time."""
    if cell.mode is target_mode:
        return cell, now
    logger.debug(f"relay {cell.mode.value} -> {target_mode.value} at t={now}")
    return replace(cell, mode=target_mode), now + cell.switch_latency
