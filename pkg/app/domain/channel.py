# app/domain/channel.py
"""
Underwater optical channel: Beer's-law attenuation, beam-divergence capture
and log-normal turbulence fading.

Notation follows the convention used throughout the simulator: the total
attenuation is the sum of an absorption term and a scattering term.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

from app.domain.errors import DegenerateGeometryError, DomainError

logger = logging.getLogger(__name__)

# --- WATER PRESETS ---
# Literature-typical (absorption, scattering) pairs in 1/m for blue-green light.
# Not measured on any particular tank; override from the scenario file.
WATER_PRESETS = {
    "pure_sea": (0.053, 0.003),
    "clear_ocean": (0.114, 0.037),
    "coastal": (0.179, 0.219),
    "turbid_harbor": (0.295, 1.875),
}


@dataclass(frozen=True)
class WaterProperties:
    absorption_coeff: float
    scattering_coeff: float

    def __post_init__(self):
        if self.absorption_coeff < 0 or self.scattering_coeff < 0:
            raise DomainError(
                f"attenuation coefficients must be >= 0, got "
                f"({self.absorption_coeff}, {self.scattering_coeff})"
            )

    @cached_property
    def total_attenuation(self) -> float:
        return self.absorption_coeff + self.scattering_coeff

    @classmethod
    def preset(cls, name: str) -> "WaterProperties":
        if name not in WATER_PRESETS:
            raise DomainError(f"Unknown water preset: {name}")
        absorption, scattering = WATER_PRESETS[name]
        return cls(absorption, scattering)


@dataclass(frozen=True)
class BeamGeometry:
    initial_radius: float
    half_angle_divergence: float
    receiver_aperture_radius: float
    distance: float

    def __post_init__(self):
        for name in ("initial_radius", "half_angle_divergence", "receiver_aperture_radius", "distance"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")


@dataclass(frozen=True)
class TurbulenceModel:
    scintillation_index: float = 0.0
    rng_stream_id: str = "fading"


@dataclass(frozen=True)
class LinkParams:
    tx_power: float
    wavelength: float
    water: WaterProperties
    geometry: BeamGeometry
    turbulence: TurbulenceModel = field(default_factory=TurbulenceModel)
    pointing_jitter: float = 0.0

    def __post_init__(self):
        if self.tx_power < 0:
            raise DomainError(f"tx_power must be >= 0, got {self.tx_power}")
        if self.pointing_jitter < 0:
            raise DomainError(f"pointing_jitter must be >= 0, got {self.pointing_jitter}")


# ==========================================
# PROPAGATION
# ==========================================
def attenuate(intensity_in: float, alpha: float, distance: float) -> float:
    """Beer's law: I = I0 * exp(-alpha * z)."""
    if intensity_in < 0 or alpha < 0 or distance < 0:
        raise DomainError(
            f"attenuate needs non-negative inputs, got I0={intensity_in}, alpha={alpha}, z={distance}"
        )
    return intensity_in * math.exp(-alpha * distance)


def beam_radius(geometry: BeamGeometry) -> float:
    return geometry.initial_radius + geometry.distance * math.tan(geometry.half_angle_divergence)


def geometric_capture(geometry: BeamGeometry) -> float:
    """
    Fraction of a uniform (top-hat) beam disc that lands on the receiver aperture.
    """
    w = beam_radius(geometry)
    if w <= 0:
        raise DegenerateGeometryError("beam radius at the receiver is zero")
    return min(1.0, (geometry.receiver_aperture_radius / w) ** 2)


def offset_capture(geometry: BeamGeometry, offset: float) -> float:
    """
    Capture fraction when the beam centre misses the aperture centre by `offset` metres.

    Overlap of two discs (beam radius w, aperture radius r) divided by the beam area.
    """
    if offset < 0:
        raise DomainError(f"offset must be >= 0, got {offset}")
    w = beam_radius(geometry)
    if w <= 0:
        raise DegenerateGeometryError("beam radius at the receiver is zero")
    r = geometry.receiver_aperture_radius
    d = offset

    # 1. Disjoint discs
    if d >= w + r:
        return 0.0
    # 2. One disc inside the other
    if d <= abs(w - r):
        return min(1.0, (min(w, r) / w) ** 2)

    # 3. Lens-shaped intersection
    cos_w = np.clip((d * d + w * w - r * r) / (2 * d * w), -1.0, 1.0)
    cos_r = np.clip((d * d + r * r - w * w) / (2 * d * r), -1.0, 1.0)
    lens = (
        w * w * math.acos(cos_w)
        + r * r * math.acos(cos_r)
        - 0.5 * math.sqrt(max(0.0, (-d + w + r) * (d + w - r) * (d - w + r) * (d + w + r)))
    )
    return float(min(1.0, lens / (math.pi * w * w)))


def sample_fading(
    model: TurbulenceModel,
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> Union[float, np.ndarray]:
    """
    Log-normal fading with unit mean; log-variance ln(1 + scintillation index).
    """
    s2 = model.scintillation_index
    if s2 < 0:
        raise DomainError(f"scintillation index must be >= 0, got {s2}")
    if s2 == 0:
        return 1.0 if size is None else np.ones(size)

    log_var = math.log1p(s2)
    samples = rng.lognormal(mean=-0.5 * log_var, sigma=math.sqrt(log_var), size=size)
    return float(samples) if size is None else samples


def pointing_offset(link: LinkParams, rng: np.random.Generator) -> float:
    """Lateral miss distance at the receiver for one jitter draw."""
    if link.pointing_jitter == 0:
        return 0.0
    angle = abs(rng.normal(0.0, link.pointing_jitter))
    return link.geometry.distance * math.tan(angle)


def mean_received_power(link: LinkParams, offset: float = 0.0) -> float:
    """Received power without the random fading factor."""
    capture = geometric_capture(link.geometry) if offset == 0 else offset_capture(link.geometry, offset)
    return attenuate(link.tx_power, link.water.total_attenuation, link.geometry.distance) * capture


def received_power(link: LinkParams, rng: np.random.Generator) -> float:
    """P_R = P_t * capture * exp(-alpha z) * fading."""
    offset = pointing_offset(link, rng)
    fade = sample_fading(link.turbulence, rng)
    power = mean_received_power(link, offset) * fade
    logger.debug(f"link {link.wavelength:.0f}nm z={link.geometry.distance}m -> {power:.6g} W")
    return power
