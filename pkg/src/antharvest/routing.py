"""Ant-based routing state machines and the min-hop baseline.

Two ant protocol variants share one machinery. Every node keeps a
routing table of per-destination pheromone over its neighbors. Forward
ants explore toward the sink, sampling next hops by pheromone weighted
with an energy visibility term, and carry the minimum and mean residual
energy seen plus their hop count. At the sink an ant turns into a
backward ant that retraces the stored per-node records and reinforces
the table entries it passes, with the deposit attenuated by the hop
distance from the sink. Data packets are routed deterministically to the
highest-probability neighbor and carry a next-node field that lets
non-addressed neighbors drop an overheard frame after its header.

The destination-aware variant (IEEABR) seeds the table with extra
probability mass on a neighboring sink; the plain variant (EEABR) seeds
uniformly. The MinHop baseline routes on cached shortest paths instead
and stands in for a conventional reactive protocol.

Tables store pheromone, not probabilities. Initialization writes
pheromone proportional to the intended initial probabilities so that,
with equal node energies and alpha = 1, the selection rule reproduces
those probabilities exactly at time zero.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction


class ProtocolKind(Enum):
    IEEABR = "IEEABR"
    EEABR = "EEABR"
    MINHOP = "MinHop"

    @classmethod
    def from_name(cls, name: str) -> "ProtocolKind":
        for kind in cls:
            if kind.value.lower() == name.lower():
                return kind
        options = ", ".join(k.value for k in cls)
        raise ValueError(f"unknown protocol {name!r}; valid options: {options}")


class IsolatedNodeError(ValueError):
    """A table was initialized with no neighbors."""


class DeadEndError(RuntimeError):
    """No admissible neighbor remains for a selection."""


class ProtocolInconsistencyError(RuntimeError):
    """A backward update referenced a link the table does not hold."""


class RouteNotFoundError(RuntimeError):
    """Source and sink are not connected."""


@dataclass
class AntParams:
    """Tunable protocol constants.

    alpha/beta weigh pheromone against energy visibility in selection,
    rho is the evaporation rate and phi scales the per-hop deposit
    attenuation. tau_min keeps every pheromone entry positive so no path
    becomes permanently unreachable. Deposits are clamped into
    [dtau_min, dtau_max] because the deposit formula mixes energy levels
    with hop counts and is unbounded near its singular points.
    energy_scale is the nominal initial energy level: node energies are
    carried as residual fraction times this constant.
    """

    alpha: float = 1.0
    beta: float = 1.0
    rho: float = 0.1
    phi: float = 1.0
    tau_min: float = 1e-4
    dtau_max: float = 10.0
    dtau_min: float = 1e-6
    record_timeout_s: float = 5.0
    ant_interval_s: float = 10.0  # None disables ant launches
    data_parts: int = 4
    energy_scale: float = 2.0
    visibility_eps_frac: float = 1e-6

    def validate(self):
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must be in [0, 1), got {self.rho!r}")
        if self.phi <= 0:
            raise ValueError(f"phi must be positive, got {self.phi!r}")
        if self.tau_min <= 0:
            raise ValueError(f"tau_min must be positive, got {self.tau_min!r}")
        if not 0 < self.dtau_min <= self.dtau_max:
            raise ValueError("need 0 < dtau_min <= dtau_max")
        if self.ant_interval_s is not None and self.ant_interval_s <= 0:
            raise ValueError(f"ant interval must be positive or None, got {self.ant_interval_s!r}")
        if self.record_timeout_s <= 0:
            raise ValueError(f"record timeout must be positive, got {self.record_timeout_s!r}")
        if self.data_parts < 1:
            raise ValueError(f"data_parts must be >= 1, got {self.data_parts!r}")
        if self.energy_scale <= 0:
            raise ValueError(f"energy_scale must be positive, got {self.energy_scale!r}")
        return self


def destination_init_weights(n_k: int) -> tuple:
    """Initial (destination, other-neighbor) probabilities as exact fractions.

    For a node with n_k neighbors one of which is the destination, the
    destination entry gets (9*n_k - 5) / (4*n_k^2) and every other
    neighbor (4*n_k - 5) / (4*n_k^2), or zero when there is a single
    neighbor. The two always sum to one across the neighbor set.
    """
    if n_k < 1:
        raise ValueError(f"need at least one neighbor, got {n_k!r}")
    p_dest = Fraction(9 * n_k - 5, 4 * n_k * n_k)
    p_other = Fraction(4 * n_k - 5, 4 * n_k * n_k) if n_k > 1 else Fraction(0)
    return p_dest, p_other


def visibility(initial_energy: float, node_energy: float, eps: float = None) -> float:
    """Energy desirability of a node: 1 / (c - e + eps).

    Strictly increasing in the node's energy e; eps (default 1e-6 of c)
    regularizes the full-energy singularity at e = c.
    """
    if eps is None:
        eps = 1e-6 * initial_energy
    if not 0.0 <= node_energy <= initial_energy:
        raise ValueError(f"node energy {node_energy!r} outside [0, {initial_energy!r}]")
    return 1.0 / (initial_energy - node_energy + eps)


def compute_deposit(initial_energy: float, emin: float, eavg: float, fd: float,
                    dtau_max: float = 10.0, dtau_min: float = 1e-6,
                    stats: dict = None) -> float:
    """Pheromone quantity a backward ant will drop, from the path statistics.

    deposit = 1 / (C - (EMin - Fd) / (EAvg - Fd)) with C the initial
    energy level, EMin/EAvg the minimum and mean energies seen and Fd the
    forward hop count. The ratio is singular at EAvg = Fd and the outer
    denominator can reach zero or below, so degenerate cases clamp to
    dtau_max and every result is kept inside [dtau_min, dtau_max].
    Clamp events are counted in stats['deposit_clamped'] when given.
    """
    if eavg < emin:
        raise ValueError(f"mean energy {eavg!r} below minimum {emin!r}")

    def clamped():
        if stats is not None:
            stats["deposit_clamped"] = stats.get("deposit_clamped", 0) + 1
        return dtau_max

    if abs(eavg - fd) < 1e-9:
        return clamped()
    denom = initial_energy - (emin - fd) / (eavg - fd)
    if denom <= 0.0 or 1.0 / denom >= dtau_max:
        return clamped()
    return max(1.0 / denom, dtau_min)


@dataclass
class ForwardAnt:
    """Exploring agent; carries only bounded state, never its full path."""

    ant_id: int
    source: int
    destination: int
    memory: tuple = ()  # last two visited node ids
    hops_so_far: int = 0
    min_energy_seen: float = math.inf
    avg_energy_accumulator: float = 0.0
    nodes_observed: int = 0

    def observe_energy(self, node_energy: float):
        """Fold one visited node's energy into the min/mean statistics."""
        self.min_energy_seen = min(self.min_energy_seen, node_energy)
        self.nodes_observed += 1
        self.avg_energy_accumulator += (node_energy - self.avg_energy_accumulator) / self.nodes_observed

    def remember(self, node: int):
        self.memory = (self.memory + (node,))[-2:]


@dataclass
class BackwardAnt:
    """Reinforcing agent created at the sink from an arrived forward ant.

    destination is the sink whose table entries the updates address;
    hops_from_sink counts the hops traveled on the return trip and must
    be at least one whenever an update is applied.
    """

    ant_id: int
    deposit: float
    destination: int
    hops_from_sink: int = 0


@dataclass
class AntRecord:
    """Per-node memory of one forwarded ant, used for loop detection and
    for steering the backward ant. previous_node is None at the launch
    node. Records expire at expires_at and are purged before lookup."""

    ant_id: int
    previous_node: int
    forward_node: int
    expires_at: float


PACKET_CODES = ("data", "error", "acknowledge")


@dataclass
class DataPacket:
    """One data part in flight.

    next_node is the only field a non-addressed neighbor has to hear
    before dropping the frame. sequence_number identifies the part for
    the per-node duplicate guard; message_id/part_index/total_parts are
    the reassembly coordinates of the payload slice.
    """

    code_id: str
    next_node: int
    sequence_number: int
    visited_count: int
    payload_part: bytes
    source: int
    destination: int
    message_id: int
    part_index: int  # 1-based
    total_parts: int

    def __post_init__(self):
        if self.code_id not in PACKET_CODES:
            raise ValueError(f"unknown code {self.code_id!r}, expected one of {PACKET_CODES}")


def split_payload(raw: bytes, m: int) -> list:
    """Split raw data into m parts with sizes differing by at most one byte.

    Concatenating the parts in order reproduces the input exactly. When
    m exceeds the payload length, the first len(raw) parts carry one byte
    each and the remainder are empty but still indexed.
    """
    if m < 1:
        raise ValueError(f"part count must be >= 1, got {m!r}")
    if not raw:
        raise ValueError("cannot split an empty payload")
    if m > len(raw):
        return [raw[i:i + 1] for i in range(len(raw))] + [b""] * (m - len(raw))
    base, extra = divmod(len(raw), m)
    parts = []
    offset = 0
    for i in range(m):
        size = base + 1 if i < extra else base
        parts.append(raw[offset:offset + size])
        offset += size
    return parts


def reassemble(parts) -> bytes:
    """Inverse of split_payload for parts given in index order."""
    return b"".join(parts)


class RoutingTable:
    """Per-destination pheromone over one node's neighbors."""

    def __init__(self, owner: int, neighbors, tau_min: float = 1e-4):
        self.owner = owner
        self.neighbors = tuple(sorted(neighbors))
        self.tau_min = tau_min
        self.entries = {}  # destination -> {neighbor: pheromone}

    def init_uniform(self, destination: int) -> None:
        """Seed a destination entry so every neighbor is equally likely."""
        if not self.neighbors:
            raise IsolatedNodeError(f"node {self.owner} has no neighbors")
        n = len(self.neighbors)
        tau = max(1.0 / n, self.tau_min)
        self.entries[destination] = {nbr: tau for nbr in self.neighbors}

    def init_destination_aware(self, destination: int) -> None:
        """Seed a destination entry with extra mass on a neighboring sink.

        Falls back to the uniform rule when the destination is not a
        direct neighbor.
        """
        if not self.neighbors:
            raise IsolatedNodeError(f"node {self.owner} has no neighbors")
        if destination not in self.neighbors:
            self.init_uniform(destination)
            return
        p_dest, p_other = destination_init_weights(len(self.neighbors))
        entry = {}
        for nbr in self.neighbors:
            weight = p_dest if nbr == destination else p_other
            entry[nbr] = max(float(weight), self.tau_min)
        self.entries[destination] = entry

    def pheromone(self, destination: int) -> dict:
        return self.entries[destination]

    def probabilities(self, destination: int, energies: dict = None,
                      alpha: float = 1.0, beta: float = 1.0,
                      initial_energy: float = 2.0, exclude=()) -> dict:
        """Selection probabilities over admissible neighbors.

        Weight of neighbor s is tau(s)^alpha * E(s)^beta where E is the
        energy visibility; with no energies given the energy term drops
        out. Neighbors in exclude (and, when energies are given, absent
        from the map) get probability exactly zero and are left out of
        the result. Probabilities always sum to one.
        """
        entry = self.entries[destination]
        weights = {}
        for nbr, tau in entry.items():
            if nbr in exclude:
                continue
            if energies is None:
                weights[nbr] = tau ** alpha
            else:
                if nbr not in energies:
                    continue
                vis = visibility(initial_energy, energies[nbr])
                weights[nbr] = tau ** alpha * vis ** beta
        total = sum(weights.values())
        if total <= 0.0:
            raise DeadEndError(f"node {self.owner}: no admissible neighbor toward {destination}")
        return {nbr: w / total for nbr, w in weights.items()}

    def reinforce(self, destination: int, neighbor: int, deposit: float,
                  rho: float, phi: float, hops_from_sink: int) -> float:
        """Evaporate and reinforce one link: (1-rho)*tau + deposit/(phi*Bd).

        Returns the new pheromone value, floored at tau_min.
        """
        entry = self.entries.get(destination)
        if entry is None or neighbor not in entry:
            raise ProtocolInconsistencyError(
                f"node {self.owner}: link to {neighbor} for destination {destination} not in table")
        tau = (1.0 - rho) * entry[neighbor] + deposit / (phi * hops_from_sink)
        tau = max(tau, self.tau_min)
        entry[neighbor] = tau
        return tau


def select_next_hop(table: RoutingTable, ant: ForwardAnt, neighbor_energies: dict,
                    rng, alpha: float = 1.0, beta: float = 1.0,
                    initial_energy: float = 2.0) -> int:
    """Sample the forward ant's next hop.

    Neighbors in the ant's memory are inadmissible; the rest are drawn
    with probability proportional to pheromone^alpha * visibility^beta.
    Raises DeadEndError when nothing is admissible (the caller kills the
    ant).
    """
    probs = table.probabilities(ant.destination, energies=neighbor_energies,
                                alpha=alpha, beta=beta, initial_energy=initial_energy,
                                exclude=ant.memory)
    draw = rng.random()
    cumulative = 0.0
    choice = None
    for nbr in sorted(probs):
        cumulative += probs[nbr]
        choice = nbr
        if draw < cumulative:
            break
    return choice


def apply_backward_update(table: RoutingTable, ant: BackwardAnt, link: tuple,
                          rho: float, phi: float) -> float:
    """Apply one backward-ant reinforcement at node r for link (r, s).

    s is the neighbor on the sink side of r (the node the backward ant
    arrived from). The ant's hop count must already reflect the hop onto
    r. Returns the updated pheromone value.
    """
    r, s = link
    if r != table.owner:
        raise ProtocolInconsistencyError(f"update for node {r} applied to table of {table.owner}")
    if ant.hops_from_sink < 1:
        raise ValueError("backward ant must have traveled at least one hop before updating")
    return table.reinforce(ant.destination, s, ant.deposit, rho, phi, ant.hops_from_sink)


class AntOutcome(Enum):
    FORWARDED = "forwarded"
    ELIMINATED = "eliminated"
    ARRIVED = "arrived-at-sink"


class DataOutcome(Enum):
    FORWARDED = "forwarded"
    DISCARDED_OVERHEARD = "discarded-overheard"
    DISCARDED_DUPLICATE = "discarded-duplicate"
    DISCARDED_NO_ROUTE = "discarded-no-route"
    DELIVERED = "delivered"


class NodeState:
    """Everything one node keeps for the ant protocols.

    Holds the routing table, the live ant records, the duplicate guard
    for data parts, and (at the sink) the reassembly buffers. Time-like
    arguments (now, timeout) are unit-agnostic as long as callers stay
    consistent.
    """

    def __init__(self, node_id: int, neighbors, sink: int, params: AntParams,
                 destination_aware: bool):
        self.node_id = node_id
        self.sink = sink
        self.params = params
        self.table = RoutingTable(node_id, neighbors, tau_min=params.tau_min)
        if node_id != sink and neighbors:
            if destination_aware:
                self.table.init_destination_aware(sink)
            else:
                self.table.init_uniform(sink)
        self.records = {}        # ant_id -> AntRecord
        self.seen_parts = set()  # sequence numbers already handled here
        self.reassembly = {}     # message_id -> {part_index: bytes}

    def live_record(self, ant_id: int, now: float):
        """The unexpired record for an ant, purging it if stale."""
        record = self.records.get(ant_id)
        if record is None:
            return None
        if record.expires_at <= now:
            del self.records[ant_id]
            return None
        return record

    def purge_expired(self, now: float):
        stale = [ant_id for ant_id, rec in self.records.items() if rec.expires_at <= now]
        for ant_id in stale:
            del self.records[ant_id]

    def handle_forward_ant(self, ant: ForwardAnt, now: float, came_from,
                           node_energy: float, neighbor_energies: dict, rng,
                           timeout: float = None):
        """Run the forward-ant flow at this node.

        Returns (AntOutcome, next_node or None). A live record with the
        same ant id means a loop and kills the ant; arrival at the
        destination hands it to the sink logic; otherwise the node stores
        a record with a fresh timeout, folds its energy into the ant's
        statistics and forwards it, or kills it at a dead end.
        """
        if timeout is None:
            timeout = self.params.record_timeout_s
        if self.live_record(ant.ant_id, now) is not None:
            return AntOutcome.ELIMINATED, None
        if self.node_id == ant.destination:
            return AntOutcome.ARRIVED, None
        ant.observe_energy(node_energy)
        ant.remember(self.node_id)
        try:
            next_node = select_next_hop(self.table, ant, neighbor_energies, rng,
                                        alpha=self.params.alpha, beta=self.params.beta,
                                        initial_energy=self.params.energy_scale)
        except DeadEndError:
            return AntOutcome.ELIMINATED, None
        self.records[ant.ant_id] = AntRecord(ant.ant_id, came_from, next_node,
                                             expires_at=now + timeout)
        ant.hops_so_far += 1
        return AntOutcome.FORWARDED, next_node

    def choose_data_next_hop(self, neighbor_energies: dict):
        """Deterministic data next hop: the highest-probability neighbor.

        Ties break toward the lowest node id. Returns None when no
        neighbor is admissible.
        """
        try:
            probs = self.table.probabilities(self.sink, energies=neighbor_energies,
                                             alpha=self.params.alpha, beta=self.params.beta,
                                             initial_energy=self.params.energy_scale)
        except (DeadEndError, KeyError):
            return None
        return min(probs, key=lambda nbr: (-probs[nbr], nbr))

    def handle_data_packet(self, pkt: DataPacket, neighbor_energies: dict, route=None):
        """Run the data-forwarding flow at this node.

        Frames addressed elsewhere are discarded after the header. A
        sequence number seen before means the part looped and is
        discarded. At the sink the part goes to the reassembly buffer;
        anywhere else the packet is readdressed to the best neighbor and
        its visited count incremented. Returns (DataOutcome, next node
        or None).

        route, when given, overrides the pheromone argmax with an
        external next-hop rule (the min-hop baseline); it takes this
        node's id and returns a neighbor or None.
        """
        if pkt.next_node != self.node_id:
            return DataOutcome.DISCARDED_OVERHEARD, None
        if pkt.sequence_number in self.seen_parts:
            return DataOutcome.DISCARDED_DUPLICATE, None
        self.seen_parts.add(pkt.sequence_number)
        if self.node_id == pkt.destination:
            buffer = self.reassembly.setdefault(pkt.message_id, {})
            buffer[pkt.part_index] = pkt.payload_part
            return DataOutcome.DELIVERED, None
        if route is not None:
            next_node = route(self.node_id)
        else:
            next_node = self.choose_data_next_hop(neighbor_energies)
        if next_node is None:
            return DataOutcome.DISCARDED_NO_ROUTE, None
        pkt.visited_count += 1
        pkt.next_node = next_node
        return DataOutcome.FORWARDED, next_node

    def completed_message(self, message_id: int, total_parts: int):
        """The reassembled payload once all parts arrived, else None."""
        buffer = self.reassembly.get(message_id)
        if buffer is None or len(buffer) < total_parts:
            return None
        return reassemble([buffer[i] for i in range(1, total_parts + 1)])


def min_hop_route(adjacency: dict, source: int, sink: int) -> list:
    """Shortest path by hop count from source to sink.

    Among equally short paths the lexicographically smallest node
    sequence wins. adjacency maps node id to an iterable of neighbor
    ids and must be symmetric. Raises RouteNotFoundError when the two
    nodes are not connected.
    """
    if source == sink:
        return [source]
    dist = {sink: 0}
    frontier = [sink]
    while frontier:
        nxt = []
        for node in frontier:
            for nbr in adjacency[node]:
                if nbr not in dist:
                    dist[nbr] = dist[node] + 1
                    nxt.append(nbr)
        frontier = nxt
    if source not in dist:
        raise RouteNotFoundError(f"no route from {source} to {sink}")
    path = [source]
    current = source
    while current != sink:
        candidates = [nbr for nbr in adjacency[current] if dist.get(nbr) == dist[current] - 1]
        current = min(candidates)
        path.append(current)
    return path


class MinHopRouter:
    """Reactive shortest-path forwarding for the baseline protocol.

    Next hops are cached and recomputed only when a node on a cached
    route dies, mimicking an on-demand protocol without modeling its
    control traffic (a deliberately generous baseline).
    """

    def __init__(self, adjacency: dict, sink: int):
        self._adjacency = {node: tuple(sorted(nbrs)) for node, nbrs in adjacency.items()}
        self._sink = sink
        self._alive = set(self._adjacency)
        self._next_hop = {}

    def node_died(self, node: int):
        self._alive.discard(node)
        self._next_hop.clear()

    def _alive_adjacency(self) -> dict:
        return {node: [nbr for nbr in nbrs if nbr in self._alive]
                for node, nbrs in self._adjacency.items() if node in self._alive}

    def next_hop(self, node: int) -> int:
        """The next node toward the sink; raises RouteNotFoundError if cut off."""
        if node == self._sink:
            raise ValueError("sink does not forward to itself")
        cached = self._next_hop.get(node)
        if cached is not None and cached in self._alive:
            return cached
        path = min_hop_route(self._alive_adjacency(), node, self._sink)
        # Cache the whole route; downstream nodes will walk the same tree.
        for here, there in zip(path, path[1:]):
            self._next_hop[here] = there
        return path[1]
