# app/engine/simulator.py
"""
Discrete-event simulation of an underwater optical SLIPT deployment.

Between two events every node draws a constant harvest and a constant load,
so the store is integrated exactly over each interval. Events come off one
heap in (time, sequence) order; every random draw comes from a stream keyed
by (seed, node, purpose). Same scenario + same seed = identical trace.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.config.scenario import NodeSpec, PolicySpec, ScenarioSpec, TransmitterSpec, WaterSpec
from app.config.units import parse_quantity
from app.data.loaders import load_replay
from app.domain.channel import (
    BeamGeometry,
    LinkParams,
    TurbulenceModel,
    WaterProperties,
    mean_received_power,
    pointing_offset,
    sample_fading,
)
from app.domain.codec import FRAME_BITS, decode_command, encode_command, parse_command
from app.domain.energy_store import (
    Battery,
    Supercapacitor,
    integrate,
    is_full,
    state_of_charge,
    terminal_voltage,
    time_to_full,
)
from app.domain.errors import ConfigError, FrameError, SliptError
from app.domain.harvester import CellMode, SolarCell, decode_throughput, harvest_power, photodetector, switch_mode
from app.domain.load_profiles import get_profile, load_power
from app.domain.node import (
    Action,
    ActionKind,
    CommandsComplete,
    FullCharge,
    LightDetected,
    NodeState,
    Phase,
    PhaseLoads,
    SenseComplete,
    SensorRecord,
    Stimulus,
    Timeout,
    acknowledge_transmission,
    apply_command,
    record_sensor,
    step,
)
from app.domain.policy import (
    DualWavelength,
    DualWavelengthPlan,
    LinkSample,
    PowerSplit,
    PowerSplitting,
    ProtocolSwitching,
    SliptPolicy,
    SpatialAssignment,
    SpatialSplitting,
    TimeSwitchSchedule,
    TimeSwitching,
    assign_spatial,
    next_decode_window,
    next_mode_change,
)
from app.engine.events import Event, EventKind, EventQueue
from app.engine.metrics import LinkMetrics, Metrics, NodeMetrics
from app.engine.rng import StreamRegistry
from app.engine.state import LinkRuntime, NodeRuntime, SensorSource, TraceRecord

logger = logging.getLogger(__name__)

# Relative gap below which a store counts as full
FULL_TOLERANCE = 1e-9

IDLE_PHASES = (Phase.SLEEP, Phase.WAKE_CHECK, Phase.HARVEST)


class SimulationError(SliptError, RuntimeError):
    """Raised when a run cannot finish (event budget exhausted, broken invariant)."""


@dataclass
class SimulationResult:
    metrics: Metrics
    trace: List[TraceRecord] = field(default_factory=list)
    storage: Dict[str, Tuple[SensorRecord, ...]] = field(default_factory=dict)
    spatial: Optional[SpatialAssignment] = None

    def __iter__(self):
        # Allows `metrics, trace = run(...)`
        return iter((self.metrics, self.trace))


# ==========================================
# ENERGY INTEGRATION
# ==========================================
def step_energy(node: NodeRuntime, dt: float) -> None:
    """
    Advance one node by `dt` seconds at its current operating point.

    Harvest and load are constant over the interval, so clamping at the store
    limits is exact: surplus beyond capacity is spilled, demand beyond an empty
    store is a deficit. Book-keeping keeps harvested - consumed == delta stored.
    """
    if dt <= 0:
        return
    m = node.metrics
    harvest_e = node.harvest_w * dt
    load_e = node.load_w * dt
    net = node.harvest_w - node.load_w
    store, moved = integrate(node.store, net, dt)

    if net >= 0:
        # Charging (or holding full): the load is served in full
        m.consumed_J += load_e
        m.harvested_J += moved + load_e
        m.spilled_J += harvest_e - (moved + load_e)
    else:
        m.harvested_J += harvest_e
        m.consumed_J += harvest_e - moved
        m.deficit_J += load_e - (harvest_e - moved)

    if store.stored < store.capacity * (1 - FULL_TOLERANCE):
        node.was_full = False
    node.store = store

    if node.decoding:
        bits = decode_throughput(node.decode_receiver, node.decode_w, dt)
        m.decoded_bits += bits
        if bits == 0:
            m.outage_s += dt

    phase = node.state.phase.value
    m.phase_occupancy[phase] = m.phase_occupancy.get(phase, 0.0) + dt


# ==========================================
# SCENARIO -> DOMAIN OBJECTS
# ==========================================
def _water(ref, scenario: ScenarioSpec) -> WaterProperties:
    if isinstance(ref, WaterSpec):
        return WaterProperties(ref.absorption, ref.scattering)
    if ref in scenario.water_presets:
        custom = scenario.water_presets[ref]
        return WaterProperties(custom.absorption, custom.scattering)
    return WaterProperties.preset(ref)


def wavelength_water(scenario: ScenarioSpec) -> Dict[float, WaterProperties]:
    return {parse_quantity(key, "wavelength"): _water(ref, scenario) for key, ref in scenario.wavelength_water.items()}


def transmitter_water(tx: TransmitterSpec, scenario: ScenarioSpec) -> WaterProperties:
    """Explicit transmitter water, then the per-wavelength table, then the scenario default."""
    if tx.water is not None:
        return _water(tx.water, scenario)
    table = wavelength_water(scenario)
    if tx.wavelength in table:
        return table[tx.wavelength]
    return _water(scenario.water, scenario)


def build_link(tx: TransmitterSpec, node: NodeSpec, cell: SolarCell, scenario: ScenarioSpec) -> LinkRuntime:
    distance = math.dist(tx.position, node.position)
    if distance <= 0:
        raise ConfigError(f"nodes.{node.id}.position", f"coincides with transmitter '{tx.id}'")
    geometry = BeamGeometry(
        initial_radius=tx.beam.initial_radius,
        half_angle_divergence=tx.beam.half_angle_divergence,
        receiver_aperture_radius=cell.effective_aperture_radius,
        distance=distance,
    )
    params = LinkParams(
        tx_power=tx.tx_power,
        wavelength=tx.wavelength,
        water=transmitter_water(tx, scenario),
        geometry=geometry,
        turbulence=TurbulenceModel(tx.turbulence.scintillation_index, rng_stream_id=f"fading:{tx.id}"),
        pointing_jitter=tx.pointing_jitter,
    )
    # Surfaces DegenerateGeometryError at build time
    mean_received_power(params)
    return LinkRuntime(tx.id, params, carries_data=tx.carries_data, bit_error_rate=tx.bit_error_rate)


def build_policy(spec: PolicySpec, scenario: ScenarioSpec) -> Optional[SliptPolicy]:
    """Policy object for one node; spatial splitting is filled in once all links are known."""
    if spec.scheme == "protocol":
        return ProtocolSwitching()
    if spec.scheme == "time_switching":
        return TimeSwitching(TimeSwitchSchedule(spec.t1, spec.t2, spec.phase_offset))
    if spec.scheme == "power_splitting":
        return PowerSplitting(PowerSplit(spec.alpha))
    if spec.scheme == "dual_wavelength":
        table = wavelength_water(scenario)
        default = _water(scenario.water, scenario)
        water = {wl: table.get(wl, default) for wl in (spec.energy_wavelength, spec.data_wavelength)}
        return DualWavelength(DualWavelengthPlan(spec.energy_wavelength, spec.data_wavelength, water))
    return None


def _build_store(node: NodeSpec):
    spec = node.store
    if spec.kind == "battery":
        return Battery(capacity=spec.capacity, stored=spec.initial, v_empty=spec.v_empty, v_full=spec.v_full)
    return Supercapacitor(capacitance=spec.capacitance, rated_voltage=spec.rated_voltage, stored=spec.initial)


def _build_sensors(node: NodeSpec, base_dir: Optional[str]) -> Dict[int, SensorSource]:
    sources = {}
    for sensor in node.sensors:
        source = SensorSource(sensor.id, value=sensor.value)
        if sensor.replay:
            source.times = np.array([t for t, _ in sensor.replay], dtype=float)
            source.values = np.array([v for _, v in sensor.replay], dtype=float)
        elif sensor.replay_file:
            source.times, source.values = load_replay(sensor.replay_file, base_dir)
        sources[sensor.id] = source
    return sources


def build_node(node: NodeSpec, scenario: ScenarioSpec, base_dir: Optional[str] = None) -> NodeRuntime:
    cs = node.solar_cell
    cell = SolarCell(
        area=cs.area,
        conversion_efficiency=cs.efficiency,
        decode_bandwidth=cs.decode_bandwidth,
        decode_rate=cs.decode_rate,
        sensitivity=cs.sensitivity,
        switch_latency=cs.switch_latency,
        aperture_radius=cs.aperture_radius,
    )
    policy_spec = node.policy or scenario.policy
    policy = build_policy(policy_spec, scenario)

    decoder = None
    if policy_spec.scheme in ("power_splitting", "spatial", "dual_wavelength"):
        pd_spec = node.photodiode
        decoder = photodetector(
            decode_rate=pd_spec.decode_rate if pd_spec and pd_spec.decode_rate is not None else cell.decode_rate,
            sensitivity=pd_spec.sensitivity if pd_spec and pd_spec.sensitivity is not None else cell.sensitivity,
            area=cell.area,
        )

    loads = node.loads
    uplink_rate = loads.uplink_rate or get_profile(loads.uplink).throughput
    if not uplink_rate:
        raise ConfigError(f"nodes.{node.id}.loads.uplink_rate", f"profile '{loads.uplink}' has no data rate")

    serving = set(node.serving) if node.serving is not None else None
    links = [
        build_link(tx, node, cell, scenario)
        for tx in sorted(scenario.transmitters, key=lambda t: t.id)
        if serving is None or tx.id in serving
    ]

    store = _build_store(node)
    state = NodeState(
        v_threshold=node.v_threshold,
        enabled_sensors=frozenset(s.id for s in node.sensors if s.enabled),
        loads=PhaseLoads(sense=loads.sense, receive=loads.receive, uplink=loads.uplink, stream=loads.stream),
        stream_duration=node.stream_duration,
    )
    return NodeRuntime(
        node_id=node.id,
        store=store,
        cell=cell,
        state=state,
        policy=policy,
        decoder=decoder,
        links=links,
        sensors=_build_sensors(node, base_dir),
        metrics=NodeMetrics(initial_J=store.stored),
        sleep_power=loads.sleep_power,
        sample_cost=loads.sample_cost,
        rx_timeout=node.rx_timeout,
        uplink_rate=uplink_rate,
        uplink_power=load_power(loads.uplink),
        record_bits=loads.record_bits,
        script=[parse_command(text) for text in scenario.commands.get(node.id, [])],
        was_full=is_full(store),
    )


# ==========================================
# SIMULATOR
# ==========================================
class Simulator:
    def __init__(self, scenario: ScenarioSpec, seed: Optional[int] = None, base_dir: Optional[str] = None):
        self.scenario = scenario
        self.seed = seed if seed is not None else scenario.seed
        if self.seed is None:
            raise ConfigError("seed", "missing (pass --seed or set seed in the scenario)")

        self.queue = EventQueue()
        self.streams = StreamRegistry(self.seed)
        self.trace: List[TraceRecord] = []
        self.transmitters = {t.id: t for t in sorted(scenario.transmitters, key=lambda t: t.id)}
        self.tx_on = {t.id: self._initially_on(t) for t in self.transmitters.values()}

        # --- 1. NODES (sorted by id for deterministic iteration) ---
        self.nodes: Dict[str, NodeRuntime] = {}
        self.node_specs: Dict[str, NodeSpec] = {}
        for spec in sorted(scenario.nodes, key=lambda n: n.id):
            self.nodes[spec.id] = build_node(spec, scenario, base_dir)
            self.node_specs[spec.id] = spec

        # --- 2. SPATIAL ROLES (needs every link) ---
        self.spatial = self._assign_spatial()

        self.metrics = Metrics(
            scenario=scenario.name,
            seed=self.seed,
            scenario_hash=scenario.scenario_hash(),
            duration=scenario.duration,
            nodes={node_id: node.metrics for node_id, node in self.nodes.items()},
        )
        if self.spatial is not None:
            self.metrics.spatial_roles = {t: r.value for t, r in sorted(self.spatial.roles.items())}
            self.metrics.spatial_infeasible = list(self.spatial.infeasible)

    @property
    def now(self) -> float:
        return self.queue.now

    @staticmethod
    def _initially_on(tx: TransmitterSpec) -> bool:
        if tx.active is None:
            return True
        return any(start <= 0 < end for start, end in tx.active)

    def _assign_spatial(self) -> Optional[SpatialAssignment]:
        receivers = [n for n in self.nodes.values() if n.policy is None]
        if not receivers:
            return None
        link_power = {(l.tx_id, n.node_id): mean_received_power(l.params) for n in receivers for l in n.links}
        demands = {
            n.node_id: n.decode_receiver.sensitivity for n in receivers if self.node_specs[n.node_id].data_demand
        }
        capable = {t.id for t in self.transmitters.values() if t.carries_data}
        assignment = assign_spatial(list(self.transmitters), [n.node_id for n in receivers], link_power, demands, capable)
        for n in receivers:
            n.policy = SpatialSplitting(assignment)
        logger.info(f"spatial roles: {', '.join(f'{t}={r.value}' for t, r in sorted(assignment.roles.items()))}")
        return assignment

    # --- 1. MAIN LOOP ---
    def run(self) -> SimulationResult:
        duration = self.scenario.duration
        engine = self.scenario.engine
        logger.info(f"🚀 Running '{self.scenario.name}' for {duration:g}s with seed {self.seed}")

        self._bootstrap()
        while self.queue:
            if self.queue.peek_time() > duration:
                break
            if self.metrics.events_processed >= engine.max_events:
                raise SimulationError(f"event budget of {engine.max_events} exhausted at t={self.now:g}s")
            event = self.queue.pop()
            self._advance(event.time)
            touched = self._dispatch(event)
            self.metrics.events_processed += 1
            for node_id in touched:
                self._record(self.nodes[node_id], event.kind.value)

        # Simulated time always runs to the end, even with an empty queue
        self.queue.now = max(self.queue.now, duration)
        self._advance(duration)
        for node in self.nodes.values():
            node.metrics.final_J = node.store.stored
            node.metrics.final_soc = state_of_charge(node.store)
            self._record(node, "End")
        self.metrics.end_time = duration

        logger.info(
            f"✅ Finished '{self.scenario.name}': {self.metrics.events_processed} events, "
            f"{len(self.trace)} trace records"
        )
        return SimulationResult(
            metrics=self.metrics,
            trace=self.trace,
            storage={node_id: node.state.storage for node_id, node in self.nodes.items()},
            spatial=self.spatial,
        )

    def _bootstrap(self) -> None:
        engine = self.scenario.engine
        duration = self.scenario.duration

        if any(l.params.turbulence.scintillation_index > 0 or l.params.pointing_jitter > 0
               for node in self.nodes.values() for l in node.links):
            self._resample_channel()
            if engine.slot <= duration:
                self.queue.push(engine.slot, EventKind.SLOT_BOUNDARY, tag="fading", payload=1)

        for tx in self.transmitters.values():
            for start, end in tx.active or []:
                if start > 0:
                    self.queue.push(start, EventKind.CUSTOM, tag="tx_on", payload=tx.id)
                self.queue.push(end, EventKind.CUSTOM, tag="tx_off", payload=tx.id)

        for node in self.nodes.values():
            if isinstance(node.policy, TimeSwitching):
                nxt = next_mode_change(node.policy.schedule, 0.0)
                if nxt is not None:
                    self.queue.push(nxt, EventKind.SLOT_BOUNDARY, node.node_id, tag="mode")
            if engine.wake_interval is not None:
                self.queue.push(engine.wake_interval, EventKind.TIMER_EXPIRY, node.node_id, tag="wake")

        for node in self.nodes.values():
            self._record(node, "Start")
            self._refresh(node)

    def _advance(self, t: float) -> None:
        for node in self.nodes.values():
            step_energy(node, t - node.t_last)
            node.t_last = max(node.t_last, t)

    # --- 2. EVENT DISPATCH ---
    def _dispatch(self, event: Event) -> List[str]:
        kind = event.kind
        node = self.nodes.get(event.node_id) if event.node_id else None

        if kind is EventKind.SLOT_BOUNDARY and event.tag == "fading":
            self._resample_channel()
            nxt = (event.payload + 1) * self.scenario.engine.slot
            if nxt <= self.scenario.duration:
                self.queue.push(nxt, EventKind.SLOT_BOUNDARY, tag="fading", payload=event.payload + 1)
            for n in self.nodes.values():
                self._refresh(n)
            return list(self.nodes)

        if kind is EventKind.SLOT_BOUNDARY:
            self._on_mode_boundary(node)
        elif kind is EventKind.CUSTOM and event.tag in ("tx_on", "tx_off"):
            self.tx_on[event.payload] = event.tag == "tx_on"
            served = [n for n in self.nodes.values() if any(l.tx_id == event.payload for l in n.links)]
            for n in served:
                self._refresh(n)
            return [n.node_id for n in served]
        elif kind is EventKind.CUSTOM:
            # relay_ready: the cell finished switching
            self._refresh(node)
        elif kind is EventKind.CHARGE_CHECK:
            if event.token != node.charge_token:
                return []
            self._on_charge_check(node)
        elif kind is EventKind.SENSE_TICK:
            self._on_sense_tick(node)
        elif kind is EventKind.FRAME_ARRIVAL:
            if event.token != node.rx_token or node.state.phase is not Phase.COMMAND_RX:
                return []
            self._on_frame(node)
        elif kind is EventKind.TIMER_EXPIRY:
            if not self._on_timer(node, event):
                return []
        return [node.node_id] if node is not None else []

    def _on_mode_boundary(self, node: NodeRuntime) -> None:
        schedule = node.policy.schedule
        self._refresh(node)
        nxt = next_mode_change(schedule, self.now)
        if nxt is not None and nxt <= self.now:
            nxt = next_mode_change(schedule, self.now + schedule.period * 1e-9)
        if nxt is not None and nxt <= self.scenario.duration:
            self.queue.push(nxt, EventKind.SLOT_BOUNDARY, node.node_id, tag="mode")

    def _on_charge_check(self, node: NodeRuntime) -> None:
        store = node.store
        gap = store.capacity - store.stored
        if 0 < gap <= store.capacity * FULL_TOLERANCE:
            node.metrics.harvested_J += gap
            node.store = replace(store, stored=store.capacity)
        if not is_full(node.store):
            self._refresh(node)
            return
        if not node.was_full:
            node.was_full = True
            node.metrics.charge_completions.append(self.now)
        if node.state.phase is Phase.HARVEST:
            self._deliver(node, FullCharge())
        else:
            self._refresh(node)

    def _on_sense_tick(self, node: NodeRuntime) -> None:
        if node.sense_queue:
            sensor_id = node.sense_queue.pop(0)
            source = node.sensors.get(sensor_id) or SensorSource(sensor_id)
            state, actions = record_sensor(node.state, sensor_id, source.sample(self.now), self.now)
            if not actions:
                node.metrics.recorded_samples += 1
            node.state = state
            self._apply_all(node, actions)
        if node.sense_queue:
            self.queue.push(self.now + node.sample_cost, EventKind.SENSE_TICK, node.node_id)
        else:
            self._deliver(node, SenseComplete())

    def _on_timer(self, node: NodeRuntime, event: Event) -> bool:
        """Returns False for stale timers."""
        if event.tag == "wake":
            interval = self.scenario.engine.wake_interval
            if self.now + interval <= self.scenario.duration:
                self.queue.push(self.now + interval, EventKind.TIMER_EXPIRY, node.node_id, tag="wake")
            if node.lit and node.state.phase is Phase.SLEEP:
                self._deliver(node, LightDetected(terminal_voltage(node.store)))
            return True

        if event.token != node.rx_token:
            return False
        if event.tag == "rx_timeout":
            if node.state.phase is not Phase.COMMAND_RX:
                return False
            logger.info(f"{node.node_id}: receive window timed out at t={self.now:g}s")
            self._close_receiver(node)
            self._deliver(node, Timeout())
        elif event.tag == "uplink_done":
            self._finish_uplink(node, *event.payload)
        elif event.tag == "stream_end":
            self._deliver(node, Timeout())
        return True

    # --- 3. PROTOCOL STIMULI AND ACTIONS ---
    def _deliver(self, node: NodeRuntime, stimulus: Stimulus) -> None:
        state, actions = step(node.state, stimulus)
        node.state = state
        self._apply_all(node, actions)
        self._refresh(node)

    def _apply_all(self, node: NodeRuntime, actions: List[Action]) -> None:
        for action in actions:
            self._apply(node, action)

    def _apply(self, node: NodeRuntime, action: Action) -> None:
        kind = action.kind
        if kind is ActionKind.MEASURE_BATTERY:
            self._deliver(node, LightDetected(terminal_voltage(node.store)))
        elif kind is ActionKind.SWITCH_CELL:
            # Only protocol-driven switching moves the relay; other schemes own the cell mode
            if node.policy.exclusive and node.policy.cell_mode(self.now) is None:
                self._switch_cell(node, action.mode)
        elif kind is ActionKind.START_SENSING:
            node.sense_queue = list(action.sensors)
            if node.sense_queue:
                self.queue.push(self.now + node.sample_cost, EventKind.SENSE_TICK, node.node_id)
            else:
                self._deliver(node, SenseComplete())
        elif kind is ActionKind.OPEN_RECEIVER:
            self._open_receiver(node)
        elif kind is ActionKind.START_STREAM:
            node.rx_token += 1
            self.queue.push(
                self.now + node.state.stream_duration, EventKind.TIMER_EXPIRY, node.node_id,
                tag="stream_end", token=node.rx_token,
            )
        elif kind is ActionKind.TRANSMIT:
            self._start_uplink(node, len(node.state.storage), retransmission=False)
        elif kind is ActionKind.RETRANSMIT:
            self._start_uplink(node, len(node.last_batch), retransmission=True)
        elif kind is ActionKind.PROTOCOL_ERROR:
            node.metrics.protocol_errors += 1
            logger.warning(f"{node.node_id}: {action.detail} at t={self.now:g}s")
            self._record(node, "ProtocolError")
        elif kind is ActionKind.WARNING:
            logger.warning(f"{node.node_id}: {action.detail}")
            self._record(node, "Warning")
        # AWAIT_FULL_CHARGE and SLEEP need nothing beyond the refresh that follows

    def _switch_cell(self, node: NodeRuntime, mode: CellMode) -> None:
        cell, ready_at = switch_mode(node.cell, mode, self.now)
        if cell is node.cell:
            return
        node.cell = cell
        node.cell_ready_at = ready_at
        if ready_at > self.now:
            self.queue.push(ready_at, EventKind.CUSTOM, node.node_id, tag="relay_ready")

    # --- 4. DOWNLINK COMMANDS ---
    def _open_receiver(self, node: NodeRuntime) -> None:
        node.rx_token += 1
        node.frames = [(cmd, encode_command(cmd)) for cmd in node.script]
        node.script = []
        node.state = replace(node.state, pending_commands=tuple(cmd for cmd, _ in node.frames))
        self.queue.push(
            self.now + node.rx_timeout, EventKind.TIMER_EXPIRY, node.node_id, tag="rx_timeout", token=node.rx_token
        )
        self._schedule_frame(node, max(self.now, node.cell_ready_at))

    def _close_receiver(self, node: NodeRuntime) -> None:
        node.rx_token += 1
        node.metrics.frames_lost += len(node.frames)
        node.frames = []
        node.uplinking = False

    def _schedule_frame(self, node: NodeRuntime, start: float) -> None:
        rate = node.decode_receiver.decode_rate
        if not node.frames or rate <= 0:
            self._close_receiver(node)
            self._deliver(node, CommandsComplete())
            return
        frame_time = FRAME_BITS / rate
        if isinstance(node.policy, TimeSwitching):
            start = next_decode_window(node.policy.schedule, start, frame_time)
            if start is None:
                logger.warning(f"{node.node_id}: decode slot shorter than one frame; commands dropped")
                self._close_receiver(node)
                self._deliver(node, CommandsComplete())
                return
        self.queue.push(start + frame_time, EventKind.FRAME_ARRIVAL, node.node_id, token=node.rx_token)

    def _command_link(self, node: NodeRuntime) -> Optional[LinkRuntime]:
        candidates = [l for l in node.links if l.carries_data and self.tx_on[l.tx_id]]
        if isinstance(node.policy, SpatialSplitting):
            data = node.policy.assignment.data_sources(node.node_id)
            candidates = [l for l in candidates if l.tx_id in data]
        if isinstance(node.policy, DualWavelength):
            candidates = [l for l in candidates if l.params.wavelength == node.policy.plan.data_wavelength]
        if not candidates:
            return None
        return min(candidates, key=lambda l: (-self._link_power(l), l.tx_id))

    def _corrupt(self, node: NodeRuntime, frame: bytes, bit_error_rate: float) -> bytes:
        if bit_error_rate <= 0:
            return frame
        rng = self.streams.get(node.node_id, "frames")
        bits = np.unpackbits(np.frombuffer(frame, dtype=np.uint8))
        flips = rng.random(bits.size) < bit_error_rate
        return np.packbits(bits ^ flips.astype(np.uint8)).tobytes()

    def _on_frame(self, node: NodeRuntime) -> None:
        cmd, frame = node.frames.pop(0)
        node.state = replace(node.state, pending_commands=node.state.pending_commands[1:])
        link = self._command_link(node)

        if link is None or not node.decoding or node.decode_w < node.decode_receiver.sensitivity:
            node.metrics.frames_lost += 1
            logger.info(f"{node.node_id}: frame {cmd} lost in outage at t={self.now:g}s")
        else:
            stats = self.metrics.links.setdefault(f"{link.tx_id}->{node.node_id}", LinkMetrics())
            try:
                decoded = decode_command(self._corrupt(node, frame, link.bit_error_rate))
            except FrameError as e:
                stats.frame_errors += 1
                logger.info(f"{node.node_id}: dropped frame ({e})")
            else:
                stats.frames_delivered += 1
                node.metrics.commands_received += 1
                state, actions = apply_command(node.state, decoded)
                node.state = state
                self._apply_all(node, actions)

        if not node.uplinking and node.state.phase is Phase.COMMAND_RX:
            self._schedule_frame(node, self.now)

    # --- 5. UPLINK ---
    def _start_uplink(self, node: NodeRuntime, count: int, retransmission: bool) -> None:
        if count == 0:
            return
        node.uplinking = True
        airtime = count * node.record_bits / node.uplink_rate
        self.queue.push(
            self.now + airtime, EventKind.TIMER_EXPIRY, node.node_id,
            tag="uplink_done", token=node.rx_token, payload=(count, retransmission),
        )
        self._refresh(node)

    def _finish_uplink(self, node: NodeRuntime, count: int, retransmission: bool) -> None:
        node.uplinking = False
        if retransmission:
            node.metrics.retransmitted_records += count
        else:
            node.last_batch = node.state.storage[:count]
            node.state = acknowledge_transmission(node.state, count)
            node.metrics.delivered_records += count
        self._refresh(node)
        self._schedule_frame(node, self.now)

    # --- 6. CHANNEL AND OPERATING POINT ---
    def _resample_channel(self) -> None:
        for node in self.nodes.values():
            for link in node.links:
                if link.params.turbulence.scintillation_index > 0:
                    rng = self.streams.get(node.node_id, link.params.turbulence.rng_stream_id)
                    link.fade = sample_fading(link.params.turbulence, rng)
                if link.params.pointing_jitter > 0:
                    rng = self.streams.get(node.node_id, f"pointing:{link.tx_id}")
                    link.offset = pointing_offset(link.params, rng)

    def _link_power(self, link: LinkRuntime) -> float:
        if not self.tx_on[link.tx_id]:
            return 0.0
        return mean_received_power(link.params, link.offset) * link.fade

    def _refresh(self, node: NodeRuntime) -> None:
        """Recompute the node's constant harvest/load/decode powers from now on."""
        samples = [LinkSample(l.tx_id, self._link_power(l), l.carries_data, l.params.wavelength) for l in node.links]

        forced = node.policy.cell_mode(self.now)
        if forced is not None:
            self._switch_cell(node, forced)
        ready = self.now >= node.cell_ready_at

        routing = node.policy.route(node.node_id, samples, node.cell.mode)
        if node.policy.exclusive:
            harvesting = ready and node.cell.mode is CellMode.PHOTOVOLTAIC
            node.decoding = ready and node.cell.mode is CellMode.PHOTOCONDUCTIVE
        else:
            harvesting, node.decoding = True, True
        node.harvest_w = harvest_power(node.cell, routing.harvest) if harvesting else 0.0
        node.decode_w = routing.decode if node.decoding else 0.0

        if node.state.phase in IDLE_PHASES:
            node.load_w = node.sleep_power
        elif node.uplinking:
            node.load_w = node.uplink_power
        else:
            node.load_w = load_power(node.state.active_load)

        # Charge completion: re-armed on every change of operating point
        node.charge_token += 1
        net = node.harvest_w - node.load_w
        if is_full(node.store):
            if node.state.phase is Phase.HARVEST or not node.was_full:
                self.queue.push(self.now, EventKind.CHARGE_CHECK, node.node_id, token=node.charge_token)
        elif net > 0:
            self.queue.push(
                self.now + time_to_full(node.store, net), EventKind.CHARGE_CHECK, node.node_id,
                token=node.charge_token,
            )

        incident = sum(s.power for s in samples)
        lit = incident > 0 and incident >= node.cell.sensitivity
        rising = lit and not node.lit
        node.lit = lit
        if rising and node.state.phase is Phase.SLEEP:
            self._deliver(node, LightDetected(terminal_voltage(node.store)))

    # --- 7. TRACE ---
    def _record(self, node: NodeRuntime, event_kind: str) -> None:
        if not self.scenario.trace.enabled:
            return
        self.trace.append(
            TraceRecord(
                time=self.now,
                node_id=node.node_id,
                event_kind=event_kind,
                phase=node.state.phase.value,
                stored_J=node.store.stored,
                V_B=terminal_voltage(node.store),
                harvested_J_cum=node.metrics.harvested_J,
                decoded_bits_cum=node.metrics.decoded_bits,
                soc=state_of_charge(node.store),
            )
        )


def run(scenario: ScenarioSpec, seed: Optional[int] = None, base_dir: Optional[str] = None) -> SimulationResult:
    """Simulate `scenario` to its duration; `seed` overrides the scenario's own."""
    return Simulator(scenario, seed=seed, base_dir=base_dir).run()
