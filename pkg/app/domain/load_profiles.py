# app/domain/load_profiles.py

from dataclasses import dataclass
from typing import Optional

from app.domain.errors import ConfigError


@dataclass(frozen=True)
class LoadProfile:
    name: str
    supply_voltage: float
    current: float
    throughput: Optional[float]
    features: str

    @property
    def power(self) -> float:
        return self.supply_voltage * self.current


# Current draw of a fully awake device per enabled feature set
LOAD_PROFILES = {
    "wifi_bluetooth": LoadProfile("wifi_bluetooth", 3.7, 102e-3, 500e3, "Wi-Fi, Bluetooth"),
    "iot_10mhz": LoadProfile("iot_10mhz", 3.7, 36e-3, 500e3, "IoT with clock at 10MHz"),
    "soc_3mhz": LoadProfile("soc_3mhz", 3.7, 11e-3, 115.2e3, "SoC with microcontroller at 3MHz"),
    "video_streaming": LoadProfile("video_streaming", 5.0, 110e-3, None, "Video streaming"),
    "sense_and_save": LoadProfile("sense_and_save", 3.7, 7e-3, None, "Sensing and saving data"),
    "video_wifi_bt": LoadProfile("video_wifi_bt", 5.0, 236e-3, 500e3, "Video streaming, Wi-Fi and Bluetooth"),
    "sleep": LoadProfile("sleep", 3.7, 0.0, None, "Sleep"),
}


def get_profile(profile_name: str) -> LoadProfile:
    profile = LOAD_PROFILES.get(profile_name)
    if profile is None:
        raise ConfigError("load_profile", f"unknown load profile '{profile_name}'")
    return profile


def load_power(profile_name: str) -> float:
    return get_profile(profile_name).power
