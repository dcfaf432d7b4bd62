"""Deterministic event-driven engine for the sensor-network scenarios.

Model summary:

- Time advances in integer microseconds so that per-node radio-state
  times always sum exactly to the scenario duration.
- Radios are half duplex and collision free: a frame occupies the sender
  and the addressed receiver for the same interval, chosen as the first
  instant both radios are free. Alive neighbors of the sender overhear
  the frame; under the ant protocols they spend only the 64-bit header
  in receive mode before dropping it (the packet format carries the next
  node id up front), while the MinHop baseline models a conventional
  radio that receives the whole frame before discarding it.
- Every microsecond of every node is attributed to exactly one radio
  state. Gaps while a node holds queued frames count as idle processor
  time (configurable); all other gaps are sleep.
- Each non-sink node emits a fixed-size message per CBR interval, split
  into M parts that are forwarded part by part toward the single sink
  (the highest node id). Under the ant protocols each node also launches
  a forward ant per ant interval.
- An optional harvest source charges every alive node once per second at
  the current its distance maps to on the harvest curve.
- Depleted nodes drop out: their links vanish and frames addressed to or
  queued at them are lost.

All randomness derives from the scenario seed through named streams, so
identical scenarios produce bit-identical outputs, and all protocols see
identical topologies and traffic timing for a given seed.
"""

import hashlib
import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .energy import Battery, ConsumptionProfile, RadioState
from .harvester import HarvestSource, harvest_at
from .routing import (AntOutcome, AntParams, BackwardAnt, DataOutcome, DataPacket,
                      ForwardAnt, MinHopRouter, NodeState, ProtocolInconsistencyError,
                      ProtocolKind, RouteNotFoundError, apply_backward_update,
                      compute_deposit, split_payload)

US_PER_S = 1_000_000
METERS_PER_FOOT = 0.3048
METRIC_SAMPLE_INTERVAL_S = 60

# Event kind priorities: ties at one timestamp resolve in this order so
# same-time radio activity is accounted before metrics are sampled.
_EV_TX_COMPLETE = 0
_EV_RECORD_TIMEOUT = 1
_EV_HARVEST_TICK = 2
_EV_CBR_GENERATE = 3
_EV_ANT_LAUNCH = 4
_EV_METRIC_SAMPLE = 5

EVENT_KINDS = ("transmission-complete", "record-timeout", "harvest-tick",
               "cbr-generate", "ant-launch", "metric-sample")


class ConnectivityError(RuntimeError):
    """Topology generation could not produce a connected deployment."""


class Sample(NamedTuple):
    time_s: int
    average_residual: float
    minimum_residual: float
    packets_delivered: int
    packets_generated: int
    ants_launched: int
    ants_completed: int


TIMELINE_COLUMNS = ("time_s", "average_residual", "minimum_residual",
                    "packets_delivered", "packets_generated",
                    "ants_launched", "ants_completed")


@dataclass
class MetricsTimeline:
    """Sampled network metrics, one row per minute of simulated time."""

    samples: list

    def to_csv(self, seed: int = None) -> str:
        lines = []
        if seed is not None:
            lines.append(f"# seed={seed}")
        lines.append(",".join(TIMELINE_COLUMNS))
        for s in self.samples:
            lines.append(f"{s.time_s},{s.average_residual:.9f},{s.minimum_residual:.9f},"
                         f"{s.packets_delivered},{s.packets_generated},"
                         f"{s.ants_launched},{s.ants_completed}")
        return "\n".join(lines) + "\n"

    @property
    def final(self) -> Sample:
        return self.samples[-1]


@dataclass
class Scenario:
    """A complete, seedable experiment description.

    Defaults follow the reference parameter set: 10 nodes on 200x200 m,
    250 kbps radios, 1 Mb messages, 3600 s runs, 1150 mAh / 3.7 V
    batteries and the Waspmote consumption profile. The sink is always
    the highest node id.
    """

    seed: int = 1
    node_count: int = 10
    area_m: tuple = (200.0, 200.0)
    radio_range_m: float = 100.0
    data_rate_bps: int = 250_000
    packet_size_bits: int = 1_000_000
    cbr_interval_s: float = 60.0  # None disables data traffic
    duration_s: float = 3600.0
    protocol: ProtocolKind = ProtocolKind.IEEABR
    consumption: ConsumptionProfile = field(default_factory=ConsumptionProfile)
    battery: Battery = field(default_factory=lambda: Battery(1150.0, 3.7))
    harvesting: HarvestSource = None
    params: AntParams = field(default_factory=AntParams)
    header_bits: int = 64
    ant_bits: int = 256
    idle_between_custody: bool = True

    @property
    def sink(self) -> int:
        return self.node_count - 1

    def validate(self) -> "Scenario":
        if self.node_count < 2:
            raise ValueError(f"need at least 2 nodes, got {self.node_count}")
        if self.duration_s <= 0:
            raise ValueError(f"duration must be positive, got {self.duration_s!r}")
        if self.radio_range_m <= 0 or min(self.area_m) <= 0:
            raise ValueError("area and radio range must be positive")
        if self.data_rate_bps <= 0 or self.packet_size_bits <= 0:
            raise ValueError("data rate and packet size must be positive")
        if self.cbr_interval_s is not None and self.cbr_interval_s <= 0:
            raise ValueError(f"CBR interval must be positive or None, got {self.cbr_interval_s!r}")
        if self.header_bits <= 0 or self.ant_bits <= 0:
            raise ValueError("header and ant frame sizes must be positive")
        self.params.validate()
        if self.harvesting is not None and self.harvesting.enabled:
            x, y = self.harvesting.position_m
            if not (0 <= x <= self.area_m[0] and 0 <= y <= self.area_m[1]):
                raise ValueError(f"harvest source at {self.harvesting.position_m} "
                                 f"outside the {self.area_m} area")
        return self


@dataclass(frozen=True)
class Topology:
    """Node positions plus symmetric unit-disk adjacency."""

    positions: dict
    adjacency: dict

    def neighbors(self, node: int) -> tuple:
        return self.adjacency[node]

    def distance(self, a: int, b: int) -> float:
        (xa, ya), (xb, yb) = self.positions[a], self.positions[b]
        return math.hypot(xa - xb, ya - yb)


def _connected(adjacency: dict) -> bool:
    nodes = list(adjacency)
    seen = {nodes[0]}
    frontier = [nodes[0]]
    while frontier:
        node = frontier.pop()
        for nbr in adjacency[node]:
            if nbr not in seen:
                seen.add(nbr)
                frontier.append(nbr)
    return len(seen) == len(nodes)


def generate_topology(seed: int, node_count: int, area_m: tuple, radio_range_m: float,
                      max_attempts: int = 1000) -> Topology:
    """Drop nodes uniformly at random until the unit-disk graph connects.

    Deterministic in the seed. Raises ConnectivityError when max_attempts
    deployments in a row come out disconnected, naming the configuration.
    """
    rng = random.Random(f"{seed}:topology")
    width, height = area_m
    for _ in range(max_attempts):
        positions = {i: (rng.uniform(0.0, width), rng.uniform(0.0, height))
                     for i in range(node_count)}
        adjacency = {i: [] for i in range(node_count)}
        for i in range(node_count):
            xi, yi = positions[i]
            for j in range(i + 1, node_count):
                xj, yj = positions[j]
                if math.hypot(xi - xj, yi - yj) < radio_range_m:
                    adjacency[i].append(j)
                    adjacency[j].append(i)
        adjacency = {i: tuple(sorted(nbrs)) for i, nbrs in adjacency.items()}
        if _connected(adjacency):
            return Topology(positions, adjacency)
    raise ConnectivityError(
        f"could not generate a connected topology in {max_attempts} attempts "
        f"(node_count={node_count}, area={area_m}, radio_range={radio_range_m})")


def airtime_us(bits: int, rate_bps: int) -> int:
    """Frame airtime in whole microseconds (rounded to nearest)."""
    return (bits * US_PER_S + rate_bps // 2) // rate_bps


_PAYLOAD_PATTERN = bytes(range(256))


def message_payload(message_id: int, source: int, size_bits: int) -> bytes:
    """Deterministic, position-dependent payload for one CBR message."""
    size = max(size_bits // 8, 1)
    head = message_id.to_bytes(4, "big") + source.to_bytes(2, "big")
    reps = size // len(_PAYLOAD_PATTERN) + 2
    return (head + _PAYLOAD_PATTERN * reps)[:size]


@dataclass
class _Frame:
    """One queued or in-flight transmission."""

    kind: str  # 'data' | 'fant' | 'bant'
    sender: int
    receiver: int
    bits: int
    enqueued_us: int
    payload: object


class _Node:
    __slots__ = ("node_id", "position", "battery", "alive", "queue", "tx_reserved",
                 "account_until_us", "state_us", "drained_mah", "harvested_mah",
                 "harvest_current_ua", "death_time_us")

    def __init__(self, node_id, position, battery):
        self.node_id = node_id
        self.position = position
        self.battery = battery
        self.alive = True
        self.queue = deque()
        self.tx_reserved = False
        self.account_until_us = 0
        self.state_us = {state: 0 for state in RadioState}
        self.drained_mah = 0.0
        self.harvested_mah = 0.0
        self.harvest_current_ua = 0.0
        self.death_time_us = None


class Simulation:
    """One scenario run. Construct, call run(), then inspect summary().

    A pre-built Topology may be injected for fixed deployments; it must
    cover exactly the scenario's node ids.
    """

    def __init__(self, scenario: Scenario, topology: Topology = None):
        self.scenario = scenario.validate()
        sc = self.scenario
        self.duration_us = round(sc.duration_s * US_PER_S)
        if topology is None:
            topology = generate_topology(sc.seed, sc.node_count, sc.area_m, sc.radio_range_m)
        elif sorted(topology.positions) != list(range(sc.node_count)):
            raise ValueError("injected topology does not match the scenario's node count")
        self.topology = topology
        self.sink = sc.sink
        self.nodes = [_Node(i, self.topology.positions[i], sc.battery.copy())
                      for i in range(sc.node_count)]
        self._initial_charge = [n.battery.charge_mah for n in self.nodes]

        self.is_ant_protocol = sc.protocol in (ProtocolKind.IEEABR, ProtocolKind.EEABR)
        if self.is_ant_protocol:
            aware = sc.protocol is ProtocolKind.IEEABR
            self.states = [NodeState(i, self.topology.neighbors(i), self.sink,
                                     sc.params, destination_aware=aware)
                           for i in range(sc.node_count)]
            self.router = None
        else:
            self.states = [NodeState(i, self.topology.neighbors(i), self.sink,
                                     sc.params, destination_aware=False)
                           for i in range(sc.node_count)]
            self.router = MinHopRouter(self.topology.adjacency, self.sink)

        if sc.harvesting is not None and sc.harvesting.enabled:
            hx, hy = sc.harvesting.position_m
            for node in self.nodes:
                dist_ft = math.hypot(node.position[0] - hx, node.position[1] - hy) / METERS_PER_FOOT
                if dist_ft <= 0:
                    dist_ft = 1e-6
                _, current = harvest_at(sc.harvesting.curve, dist_ft)
                node.harvest_current_ua = current

        self._traffic_rng = random.Random(f"{sc.seed}:traffic")
        self._protocol_rng = random.Random(f"{sc.seed}:protocol")
        self._events = []
        self._event_seq = 0
        self._ant_ids = 0
        self._message_ids = 0
        self._sequence_numbers = 0
        self._now_us = 0

        self.counters = {"packets_generated": 0, "packets_delivered": 0,
                         "messages_generated": 0, "messages_delivered": 0,
                         "ants_launched": 0, "ants_completed": 0,
                         "reassembly_errors": 0}
        self.drops = {}
        self.diagnostics = {"deposit_clamped": 0, "ants_eliminated_loop": 0,
                            "ants_eliminated_dead_end": 0, "backward_ants_lost": 0}
        self._expected_payloads = {}
        self.timeline = None

        self._schedule_initial_events()

    # -- scheduling ---------------------------------------------------

    def _schedule(self, time_us: int, priority: int, node_id: int, payload=None):
        if time_us > self.duration_us:
            return
        self._event_seq += 1
        heapq.heappush(self._events, (time_us, priority, node_id, self._event_seq, payload))

    def _schedule_initial_events(self):
        sc = self.scenario
        # Phases come from the traffic stream in a fixed order so every
        # protocol sees the same generation times for the same seed.
        if sc.cbr_interval_s is not None:
            cbr_us = round(sc.cbr_interval_s * US_PER_S)
            cbr_phases = {i: round(self._traffic_rng.uniform(0.0, sc.cbr_interval_s) * US_PER_S)
                          for i in range(sc.node_count) if i != self.sink}
            for i, phase in cbr_phases.items():
                self._schedule(phase, _EV_CBR_GENERATE, i, cbr_us)
        if sc.params.ant_interval_s is not None:
            ant_us = round(sc.params.ant_interval_s * US_PER_S)
            ant_phases = {i: round(self._traffic_rng.uniform(0.0, sc.params.ant_interval_s) * US_PER_S)
                          for i in range(sc.node_count) if i != self.sink}
            if self.is_ant_protocol:
                for i, phase in ant_phases.items():
                    self._schedule(phase, _EV_ANT_LAUNCH, i, ant_us)
        if any(n.harvest_current_ua > 0 for n in self.nodes):
            self._schedule(US_PER_S, _EV_HARVEST_TICK, 0)
        sample_us = METRIC_SAMPLE_INTERVAL_S * US_PER_S
        t = 0
        while t <= self.duration_us:
            self._schedule(t, _EV_METRIC_SAMPLE, 0)
            t += sample_us

    # -- time and energy accounting ------------------------------------

    def _account(self, node: _Node, state: RadioState, dt_us: int):
        if dt_us <= 0:
            return
        node.state_us[state] += dt_us
        drained = node.battery.drain(self.scenario.consumption, state, dt_us / US_PER_S)
        node.drained_mah += drained
        if node.alive and node.battery.depleted:
            self._kill(node)

    def _fill_gap(self, node: _Node, upto_us: int, idle_from_us=None):
        gap_start = node.account_until_us
        if upto_us <= gap_start:
            return
        if idle_from_us is not None and self.scenario.idle_between_custody:
            idle_start = min(max(gap_start, idle_from_us), upto_us)
        else:
            idle_start = upto_us
        self._account(node, RadioState.SLEEP, idle_start - gap_start)
        self._account(node, RadioState.IDLE, upto_us - idle_start)
        node.account_until_us = upto_us

    def _occupy(self, node: _Node, t0_us: int, t1_us: int, state: RadioState,
                idle_from_us=None):
        assert t0_us >= node.account_until_us, "radio intervals must not overlap"
        self._fill_gap(node, t0_us, idle_from_us)
        self._account(node, state, t1_us - t0_us)
        node.account_until_us = t1_us

    def _custody_idle_from(self, node: _Node):
        """Start of the node's oldest held frame, or None without custody."""
        return node.queue[0].enqueued_us if node.queue else None

    def _settle(self, node: _Node, t_us: int):
        """Bring a node's accounting forward to t_us with filler states."""
        if node.account_until_us >= t_us:
            return
        self._fill_gap(node, t_us, self._custody_idle_from(node))

    def _kill(self, node: _Node):
        node.alive = False
        node.death_time_us = self._now_us
        if self.router is not None:
            self.router.node_died(node.node_id)

    # -- helpers --------------------------------------------------------

    def _scaled_energy(self, node: _Node) -> float:
        return self.scenario.params.energy_scale * node.battery.residual_fraction

    def _alive_neighbor_energies(self, node_id: int) -> dict:
        return {nbr: self._scaled_energy(self.nodes[nbr])
                for nbr in self.topology.neighbors(node_id)
                if self.nodes[nbr].alive}

    def _drop(self, reason: str, count: int = 1):
        self.drops[reason] = self.drops.get(reason, 0) + count

    def _next_sequence(self) -> int:
        self._sequence_numbers += 1
        return self._sequence_numbers

    # -- transmission pipeline -------------------------------------------

    def _pump(self, node: _Node):
        """Reserve the next transmission for a node with queued frames."""
        while node.queue and not node.tx_reserved and node.alive:
            frame = node.queue[0]
            if not self._revalidate(node, frame):
                node.queue.popleft()
                continue
            receiver = self.nodes[frame.receiver]
            t0 = max(self._now_us, node.account_until_us, receiver.account_until_us)
            air = airtime_us(frame.bits, self.scenario.data_rate_bps)
            if t0 + air > self.duration_us:
                return  # would not finish inside the horizon; stays queued
            node.queue.popleft()
            self._occupy(node, t0, t0 + air, RadioState.TX, idle_from_us=frame.enqueued_us)
            self._occupy(receiver, t0, t0 + air, RadioState.RX,
                         idle_from_us=self._custody_idle_from(receiver))
            overhear_bits = frame.bits if not self.is_ant_protocol else min(
                self.scenario.header_bits, frame.bits)
            oh_air = airtime_us(overhear_bits, self.scenario.data_rate_bps)
            for nbr in self.topology.neighbors(node.node_id):
                if nbr == frame.receiver:
                    continue
                other = self.nodes[nbr]
                if other.alive and other.account_until_us <= t0:
                    self._occupy(other, t0, t0 + oh_air, RadioState.RX,
                                 idle_from_us=self._custody_idle_from(other))
            node.tx_reserved = True
            self._schedule(t0 + air, _EV_TX_COMPLETE, node.node_id, frame)
            return

    def _revalidate(self, node: _Node, frame: _Frame) -> bool:
        """Repair or reject a queued frame whose receiver died meanwhile."""
        if self.nodes[frame.receiver].alive:
            return True
        if frame.kind == "data":
            next_hop = self._choose_data_hop(node.node_id)
            if next_hop is None:
                self._drop("no-route")
                return False
            frame.payload.next_node = next_hop
            frame.receiver = next_hop
            return True
        if frame.kind == "fant":
            self.diagnostics["ants_eliminated_dead_end"] += 1
        else:
            self.diagnostics["backward_ants_lost"] += 1
        return False

    def _baseline_route(self, node_id: int):
        try:
            return self.router.next_hop(node_id)
        except RouteNotFoundError:
            return None

    def _choose_data_hop(self, node_id: int):
        if self.is_ant_protocol:
            return self.states[node_id].choose_data_next_hop(
                self._alive_neighbor_energies(node_id))
        return self._baseline_route(node_id)

    def _enqueue(self, node: _Node, frame: _Frame):
        node.queue.append(frame)
        self._pump(node)

    # -- event handlers ----------------------------------------------------

    def _on_tx_complete(self, sender_id: int, frame: _Frame):
        sender = self.nodes[sender_id]
        sender.tx_reserved = False
        receiver = self.nodes[frame.receiver]
        if not sender.alive:
            if frame.kind == "data":
                self._drop("sender-died")
            self._pump(receiver)
            return
        if not receiver.alive:
            if frame.kind == "data":
                self._drop("receiver-died")
            elif frame.kind == "fant":
                self.diagnostics["ants_eliminated_dead_end"] += 1
            else:
                self.diagnostics["backward_ants_lost"] += 1
            self._pump(sender)
            return
        handler = {"data": self._deliver_data, "fant": self._deliver_forward_ant,
                   "bant": self._deliver_backward_ant}[frame.kind]
        handler(frame)
        self._pump(sender)
        self._pump(receiver)

    def _deliver_data(self, frame: _Frame):
        receiver = self.nodes[frame.receiver]
        pkt = frame.payload
        route = None if self.is_ant_protocol else self._baseline_route
        outcome, next_hop = self.states[receiver.node_id].handle_data_packet(
            pkt, self._alive_neighbor_energies(receiver.node_id), route=route)
        if outcome is DataOutcome.DELIVERED:
            self.counters["packets_delivered"] += 1
            self._check_reassembly(pkt)
        elif outcome is DataOutcome.FORWARDED:
            self._enqueue(receiver, _Frame("data", receiver.node_id, next_hop,
                                           frame.bits, self._now_us, pkt))
        elif outcome is DataOutcome.DISCARDED_DUPLICATE:
            self._drop("duplicate")
        elif outcome is DataOutcome.DISCARDED_NO_ROUTE:
            self._drop("no-route")

    def _check_reassembly(self, pkt: DataPacket):
        sink_state = self.states[self.sink]
        payload = sink_state.completed_message(pkt.message_id, pkt.total_parts)
        if payload is None:
            return
        self.counters["messages_delivered"] += 1
        digest = hashlib.sha256(payload).digest()
        if digest != self._expected_payloads.pop(pkt.message_id, digest):
            self.counters["reassembly_errors"] += 1
        del sink_state.reassembly[pkt.message_id]

    def _deliver_forward_ant(self, frame: _Frame):
        receiver = self.nodes[frame.receiver]
        ant = frame.payload
        outcome, next_hop = self.states[receiver.node_id].handle_forward_ant(
            ant, self._now_us, came_from=frame.sender,
            node_energy=self._scaled_energy(receiver),
            neighbor_energies=self._alive_neighbor_energies(receiver.node_id),
            rng=self._protocol_rng,
            timeout=round(self.scenario.params.record_timeout_s * US_PER_S))
        if outcome is AntOutcome.FORWARDED:
            self._schedule(self._now_us + round(self.scenario.params.record_timeout_s * US_PER_S),
                           _EV_RECORD_TIMEOUT, receiver.node_id, ant.ant_id)
            self._enqueue(receiver, _Frame("fant", receiver.node_id, next_hop,
                                           self.scenario.ant_bits, self._now_us, ant))
        elif outcome is AntOutcome.ARRIVED:
            deposit = compute_deposit(self.scenario.params.energy_scale,
                                      ant.min_energy_seen, ant.avg_energy_accumulator,
                                      ant.hops_so_far,
                                      dtau_max=self.scenario.params.dtau_max,
                                      dtau_min=self.scenario.params.dtau_min,
                                      stats=self.diagnostics)
            back = BackwardAnt(ant.ant_id, deposit, destination=ant.destination)
            self._enqueue(receiver, _Frame("bant", receiver.node_id, frame.sender,
                                           self.scenario.ant_bits, self._now_us, back))
        else:
            self.diagnostics["ants_eliminated_loop"] += 1

    def _deliver_backward_ant(self, frame: _Frame):
        receiver = self.nodes[frame.receiver]
        ant = frame.payload
        ant.hops_from_sink += 1
        state = self.states[receiver.node_id]
        try:
            apply_backward_update(state.table, ant, (receiver.node_id, frame.sender),
                                  self.scenario.params.rho, self.scenario.params.phi)
        except ProtocolInconsistencyError:
            self.diagnostics["backward_ants_lost"] += 1
            return
        record = state.live_record(ant.ant_id, self._now_us)
        if record is None:
            self.diagnostics["backward_ants_lost"] += 1
            return
        if record.previous_node is None:
            self.counters["ants_completed"] += 1
            return
        if not self.nodes[record.previous_node].alive:
            self.diagnostics["backward_ants_lost"] += 1
            return
        self._enqueue(receiver, _Frame("bant", receiver.node_id, record.previous_node,
                                       self.scenario.ant_bits, self._now_us, ant))

    def _on_cbr_generate(self, node_id: int, interval_us: int):
        node = self.nodes[node_id]
        if not node.alive:
            return
        sc = self.scenario
        self._message_ids += 1
        message_id = self._message_ids
        payload = message_payload(message_id, node_id, sc.packet_size_bits)
        self._expected_payloads[message_id] = hashlib.sha256(payload).digest()
        parts = split_payload(payload, sc.params.data_parts)
        self.counters["messages_generated"] += 1
        state = self.states[node_id]
        for index, part in enumerate(parts, start=1):
            self.counters["packets_generated"] += 1
            seq = self._next_sequence()
            state.seen_parts.add(seq)
            next_hop = self._choose_data_hop(node_id)
            if next_hop is None:
                self._drop("no-route")
                continue
            pkt = DataPacket("data", next_hop, seq, visited_count=0, payload_part=part,
                             source=node_id, destination=self.sink, message_id=message_id,
                             part_index=index, total_parts=len(parts))
            bits = len(part) * 8 + sc.header_bits
            self._enqueue(node, _Frame("data", node_id, next_hop, bits, self._now_us, pkt))
        self._schedule(self._now_us + interval_us, _EV_CBR_GENERATE, node_id, interval_us)

    def _on_ant_launch(self, node_id: int, interval_us: int):
        node = self.nodes[node_id]
        if not node.alive:
            return
        self.counters["ants_launched"] += 1
        self._ant_ids += 1
        ant = ForwardAnt(self._ant_ids, source=node_id, destination=self.sink)
        outcome, next_hop = self.states[node_id].handle_forward_ant(
            ant, self._now_us, came_from=None,
            node_energy=self._scaled_energy(node),
            neighbor_energies=self._alive_neighbor_energies(node_id),
            rng=self._protocol_rng,
            timeout=round(self.scenario.params.record_timeout_s * US_PER_S))
        if outcome is AntOutcome.FORWARDED:
            self._schedule(self._now_us + round(self.scenario.params.record_timeout_s * US_PER_S),
                           _EV_RECORD_TIMEOUT, node_id, ant.ant_id)
            self._enqueue(node, _Frame("fant", node_id, next_hop,
                                       self.scenario.ant_bits, self._now_us, ant))
        else:
            self.diagnostics["ants_eliminated_dead_end"] += 1
        self._schedule(self._now_us + interval_us, _EV_ANT_LAUNCH, node_id, interval_us)

    def _on_harvest_tick(self):
        for node in self.nodes:
            if node.alive and node.harvest_current_ua > 0:
                # Settle first so the tick covers the drain of the past
                # second; a source that outpaces the draw then keeps the
                # battery pinned at capacity.
                self._settle(node, self._now_us)
                node.harvested_mah += node.battery.charge(node.harvest_current_ua, 1.0)
        self._schedule(self._now_us + US_PER_S, _EV_HARVEST_TICK, 0)

    def _on_record_timeout(self, node_id: int, ant_id: int):
        state = self.states[node_id]
        record = state.records.get(ant_id)
        if record is not None and record.expires_at <= self._now_us:
            del state.records[ant_id]

    def _on_metric_sample(self):
        for node in self.nodes:
            self._settle(node, self._now_us)
        residuals = np.array([n.battery.residual_fraction for n in self.nodes])
        self.timeline.samples.append(Sample(
            time_s=self._now_us // US_PER_S,
            average_residual=float(residuals.mean()),
            minimum_residual=float(residuals.min()),
            packets_delivered=self.counters["packets_delivered"],
            packets_generated=self.counters["packets_generated"],
            ants_launched=self.counters["ants_launched"],
            ants_completed=self.counters["ants_completed"]))

    # -- main loop -------------------------------------------------------

    def run(self) -> MetricsTimeline:
        if self.timeline is not None:
            raise RuntimeError("a Simulation instance runs once; build a new one")
        self.timeline = MetricsTimeline(samples=[])
        while self._events:
            time_us, priority, node_id, _, payload = heapq.heappop(self._events)
            self._now_us = time_us
            if priority == _EV_TX_COMPLETE:
                self._on_tx_complete(node_id, payload)
            elif priority == _EV_RECORD_TIMEOUT:
                self._on_record_timeout(node_id, payload)
            elif priority == _EV_HARVEST_TICK:
                self._on_harvest_tick()
            elif priority == _EV_CBR_GENERATE:
                self._on_cbr_generate(node_id, payload)
            elif priority == _EV_ANT_LAUNCH:
                self._on_ant_launch(node_id, payload)
            else:
                self._on_metric_sample()
        self._now_us = self.duration_us
        for node in self.nodes:
            self._settle(node, self.duration_us)
        return self.timeline

    # -- reporting ----------------------------------------------------------

    def in_flight_packets(self) -> int:
        """Data parts still queued or mid-air when the run ended."""
        queued = sum(1 for node in self.nodes for f in node.queue if f.kind == "data")
        mid_air = sum(1 for _, p, _, _, payload in self._events
                      if p == _EV_TX_COMPLETE and payload.kind == "data")
        return queued + mid_air

    def energy_ledger(self) -> list:
        """Per-node (initial, final, drained, harvested, state_us) tuples."""
        return [(self._initial_charge[n.node_id], n.battery.charge_mah,
                 n.drained_mah, n.harvested_mah, dict(n.state_us))
                for n in self.nodes]

    def summary(self) -> dict:
        final = self.timeline.final
        return {
            "seed": self.scenario.seed,
            "protocol": self.scenario.protocol.value,
            "final": {"time_s": final.time_s,
                      "average_residual": final.average_residual,
                      "minimum_residual": final.minimum_residual},
            "per_node_residual": [n.battery.residual_fraction for n in self.nodes],
            "counters": dict(self.counters),
            "packets_in_flight": self.in_flight_packets(),
            "drops": dict(sorted(self.drops.items())),
            "diagnostics": dict(self.diagnostics),
            "dead_nodes": [n.node_id for n in self.nodes if not n.alive],
        }


def run(scenario: Scenario) -> MetricsTimeline:
    """Run one scenario to completion and return its metrics timeline."""
    return Simulation(scenario).run()


@dataclass
class ComparisonResult:
    """Paired-seed protocol comparison: per-run rows plus per-protocol means."""

    rows: list        # (protocol name, seed, avg residual, min residual)
    aggregates: list  # (protocol name, mean avg residual, mean min residual)

    def to_csv(self, base_seed: int = None) -> str:
        lines = []
        if base_seed is not None:
            lines.append(f"# base_seed={base_seed}")
        lines.append("protocol,seed,avg_residual,min_residual")
        for name, seed, avg, mn in self.rows:
            lines.append(f"{name},{seed},{avg:.9f},{mn:.9f}")
        for name, avg, mn in self.aggregates:
            lines.append(f"{name},mean,{avg:.9f},{mn:.9f}")
        return "\n".join(lines) + "\n"

    def mean_average_residual(self, protocol: ProtocolKind) -> float:
        for name, avg, _ in self.aggregates:
            if name == protocol.value:
                return avg
        raise KeyError(protocol)


def compare_protocols(base_scenario: Scenario, protocols, repetitions: int) -> ComparisonResult:
    """Run each protocol over the same seeds and report paired residuals.

    Repetition i uses seed base_seed + i for every protocol, so each
    protocol sees identical topologies and traffic timings per seed.
    Scenarios are independent; rows are ordered by seed then protocol.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions!r}")
    protocols = list(protocols)
    if not protocols:
        raise ValueError("at least one protocol is required")
    rows = []
    per_protocol = {p: [] for p in protocols}
    for rep in range(repetitions):
        seed = base_scenario.seed + rep
        for protocol in protocols:
            scenario = replace(base_scenario, seed=seed, protocol=protocol)
            timeline = run(scenario)
            final = timeline.final
            rows.append((protocol.value, seed, final.average_residual, final.minimum_residual))
            per_protocol[protocol].append((final.average_residual, final.minimum_residual))
    aggregates = [(p.value,
                   sum(a for a, _ in results) / len(results),
                   sum(m for _, m in results) / len(results))
                  for p, results in per_protocol.items()]
    return ComparisonResult(rows, aggregates)
