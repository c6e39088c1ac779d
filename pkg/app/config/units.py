# app/config/units.py
"""
Unit-suffixed quantities in scenario files ("840mWh", "30kHz", "1.5m").

Each quantity family is an `Annotated[float, BeforeValidator(...)]` so the
pydantic scenario models convert to SI at load time. Bare numbers are SI.
"""

import math
import re
from typing import Annotated, Dict

from pydantic import BeforeValidator

_QUANTITY_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-zµ/0-9]*)\s*$")

UNIT_FAMILIES: Dict[str, Dict[str, float]] = {
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "min": 60.0, "h": 3600.0},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "area": {"m2": 1.0, "cm2": 1e-4, "mm2": 1e-6},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "µW": 1e-6},
    "energy": {"J": 1.0, "mJ": 1e-3, "Wh": 3600.0, "mWh": 3.6},
    "voltage": {"V": 1.0, "mV": 1e-3},
    "current": {"A": 1.0, "mA": 1e-3},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "KHz": 1e3, "MHz": 1e6},
    "rate": {"bit/s": 1.0, "bps": 1.0, "kbit/s": 1e3, "Kbit/s": 1e3, "kbps": 1e3, "Mbit/s": 1e6, "Mbps": 1e6},
    "capacitance": {"F": 1.0, "mF": 1e-3},
    "angle": {"rad": 1.0, "mrad": 1e-3, "deg": math.pi / 180.0},
    "wavelength": {"nm": 1.0},
    "attenuation": {"/m": 1.0, "1/m": 1.0},
}


def parse_quantity(value, family: str) -> float:
    """Convert `value` (number or unit string) to SI for the given family."""
    if isinstance(value, bool):
        raise ValueError(f"expected a {family} quantity, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"expected a {family} quantity, got {value!r}")

    match = _QUANTITY_RE.match(value)
    if not match:
        raise ValueError(f"cannot parse '{value}' as a {family} quantity")
    number, unit = float(match.group(1)), match.group(2)
    if not unit:
        return number

    units = UNIT_FAMILIES[family]
    if unit not in units:
        raise ValueError(f"unit '{unit}' is not a {family} unit (use one of {', '.join(units)})")
    return number * units[unit]


def _quantity(family: str):
    return Annotated[float, BeforeValidator(lambda v: parse_quantity(v, family))]


Seconds = _quantity("time")
Meters = _quantity("length")
SquareMeters = _quantity("area")
Watts = _quantity("power")
Joules = _quantity("energy")
Volts = _quantity("voltage")
Amperes = _quantity("current")
Hertz = _quantity("frequency")
BitsPerSecond = _quantity("rate")
Farads = _quantity("capacitance")
Radians = _quantity("angle")
Nanometers = _quantity("wavelength")
PerMeter = _quantity("attenuation")
