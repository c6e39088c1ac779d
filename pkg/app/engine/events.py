# app/engine/events.py

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Optional


class EventKind(str, Enum):
    SLOT_BOUNDARY = "SlotBoundary"
    FRAME_ARRIVAL = "FrameArrival"
    SENSE_TICK = "SenseTick"
    CHARGE_CHECK = "ChargeCheck"
    TIMER_EXPIRY = "TimerExpiry"
    CUSTOM = "Custom"


@dataclass(order=True)
class Event:
    time: float
    sequence: int
    kind: EventKind = field(compare=False)
    node_id: Optional[str] = field(default=None, compare=False)
    tag: str = field(default="", compare=False)
    token: int = field(default=0, compare=False)
    payload: Any = field(default=None, compare=False)


class EventQueue:
    """Min-heap ordered by (time, insertion sequence)."""

    def __init__(self):
        self._heap: List[Event] = []
        self._sequence = 0
        self.now = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: float, kind: EventKind, node_id: str = None, tag: str = "", token: int = 0, payload=None) -> Event:
        if time < self.now:
            raise ValueError(f"cannot schedule {kind.value} at t={time} before now={self.now}")
        event = Event(time, self._sequence, kind, node_id, tag, token, payload)
        self._sequence += 1
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> Event:
        event = heapq.heappop(self._heap)
        self.now = event.time
        return event

    def peek_time(self) -> Optional[float]:
        return self._heap[0].time if self._heap else None
