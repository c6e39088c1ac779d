# app/engine/metrics.py

from typing import Dict, List

from pydantic import BaseModel, Field


class NodeMetrics(BaseModel):
    harvested_J: float = 0.0
    consumed_J: float = 0.0
    spilled_J: float = 0.0
    deficit_J: float = 0.0
    decoded_bits: float = 0.0
    outage_s: float = 0.0
    recorded_samples: int = 0
    delivered_records: int = 0
    retransmitted_records: int = 0
    commands_received: int = 0
    frames_lost: int = 0
    protocol_errors: int = 0
    phase_occupancy: Dict[str, float] = Field(default_factory=dict)
    charge_completions: List[float] = Field(default_factory=list)
    initial_J: float = 0.0
    final_J: float = 0.0
    final_soc: float = 0.0

    def closure_error(self) -> float:
        """(harvested - consumed) - delta stored; zero up to rounding."""
        return (self.harvested_J - self.consumed_J) - (self.final_J - self.initial_J)


class LinkMetrics(BaseModel):
    frames_delivered: int = 0
    frame_errors: int = 0


class Metrics(BaseModel):
    scenario: str
    seed: int
    scenario_hash: str
    duration: float
    end_time: float = 0.0
    events_processed: int = 0
    nodes: Dict[str, NodeMetrics] = Field(default_factory=dict)
    links: Dict[str, LinkMetrics] = Field(default_factory=dict)
    spatial_roles: Dict[str, str] = Field(default_factory=dict)
    spatial_infeasible: List[str] = Field(default_factory=list)

    def totals(self) -> Dict[str, float]:
        return {
            "harvested_J": sum(n.harvested_J for n in self.nodes.values()),
            "consumed_J": sum(n.consumed_J for n in self.nodes.values()),
            "decoded_bits": sum(n.decoded_bits for n in self.nodes.values()),
            "delivered_records": sum(n.delivered_records for n in self.nodes.values()),
            "frame_errors": sum(l.frame_errors for l in self.links.values()),
        }
