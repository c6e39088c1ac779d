# app/domain/codec.py
"""
Downlink command frames.

    SYNC(0xAA) | OPCODE | PAYLOAD | CRC8(opcode, payload)

CRC-8 with polynomial 0x07, init 0x00, no reflection.
"""

import re
from dataclasses import dataclass
from enum import IntEnum

from app.domain.errors import FrameError

SYNC_BYTE = 0xAA
CRC8_POLY = 0x07
FRAME_LENGTH = 4
FRAME_BITS = FRAME_LENGTH * 8


class Opcode(IntEnum):
    SENSOR_ON = 0x01
    SENSOR_OFF = 0x02
    SEND_DATA = 0x03
    RETRANSMIT = 0x04


_SCRIPT_NAMES = {
    "SensorOn": Opcode.SENSOR_ON,
    "SensorOff": Opcode.SENSOR_OFF,
    "SendData": Opcode.SEND_DATA,
    "Retransmit": Opcode.RETRANSMIT,
}


@dataclass(frozen=True)
class Command:
    opcode: Opcode
    sensor_id: int = 0

    def __post_init__(self):
        if not 0 <= self.sensor_id <= 0xFF:
            raise ValueError(f"sensor id must fit in one byte, got {self.sensor_id}")

    @classmethod
    def sensor_on(cls, sensor_id: int) -> "Command":
        return cls(Opcode.SENSOR_ON, sensor_id)

    @classmethod
    def sensor_off(cls, sensor_id: int) -> "Command":
        return cls(Opcode.SENSOR_OFF, sensor_id)

    @classmethod
    def send_data(cls) -> "Command":
        return cls(Opcode.SEND_DATA)

    @classmethod
    def retransmit(cls) -> "Command":
        return cls(Opcode.RETRANSMIT)

    def __str__(self) -> str:
        name = next(k for k, v in _SCRIPT_NAMES.items() if v is self.opcode)
        if self.opcode in (Opcode.SENSOR_ON, Opcode.SENSOR_OFF):
            return f"{name}({self.sensor_id})"
        return name


def _build_crc_table():
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = ((crc << 1) ^ CRC8_POLY) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
        table.append(crc)
    return table


CRC8_TABLE = _build_crc_table()


def crc8(data: bytes) -> int:
    crc = 0
    for byte in data:
        crc = CRC8_TABLE[crc ^ byte]
    return crc


def encode_command(cmd: Command) -> bytes:
    body = bytes((int(cmd.opcode), cmd.sensor_id))
    return bytes((SYNC_BYTE,)) + body + bytes((crc8(body),))


def decode_command(frame: bytes) -> Command:
    if len(frame) != FRAME_LENGTH:
        raise FrameError(f"expected {FRAME_LENGTH} bytes, got {len(frame)}")
    if frame[0] != SYNC_BYTE:
        raise FrameError(f"bad sync byte 0x{frame[0]:02X}")

    body, received_crc = frame[1:3], frame[3]
    if crc8(body) != received_crc:
        raise FrameError(f"CRC mismatch: computed 0x{crc8(body):02X}, frame 0x{received_crc:02X}")

    try:
        opcode = Opcode(body[0])
    except ValueError:
        raise FrameError(f"unknown opcode 0x{body[0]:02X}")
    return Command(opcode, body[1])


_SCRIPT_RE = re.compile(r"^\s*(\w+)\s*(?:\(\s*(\d+)\s*\))?\s*$")


def parse_command(text: str) -> Command:
    """Scenario script syntax: 'SensorOn(1)', 'SensorOff(2)', 'SendData', 'Retransmit'."""
    match = _SCRIPT_RE.match(text)
    if not match or match.group(1) not in _SCRIPT_NAMES:
        raise ValueError(f"unknown command '{text}'")
    opcode = _SCRIPT_NAMES[match.group(1)]
    arg = match.group(2)
    if opcode in (Opcode.SENSOR_ON, Opcode.SENSOR_OFF):
        if arg is None:
            raise ValueError(f"'{text}' needs a sensor id")
        return Command(opcode, int(arg))
    if arg is not None:
        raise ValueError(f"'{text}' takes no argument")
    return Command(opcode)
