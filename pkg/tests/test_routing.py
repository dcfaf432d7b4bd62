"""Routing tables, ants, packet handling, and the min-hop baseline."""

import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antharvest.routing import (AntOutcome, AntParams, BackwardAnt, DataOutcome,
                                DataPacket, DeadEndError, ForwardAnt,
                                IsolatedNodeError, MinHopRouter, NodeState,
                                ProtocolInconsistencyError, ProtocolKind,
                                RouteNotFoundError, RoutingTable,
                                apply_backward_update, compute_deposit,
                                destination_init_weights, min_hop_route, reassemble,
                                select_next_hop, split_payload, visibility)


class TestProtocolKind:
    def test_lookup_by_name(self):
        assert ProtocolKind.from_name("ieeabr") is ProtocolKind.IEEABR
        assert ProtocolKind.from_name("MinHop") is ProtocolKind.MINHOP

    def test_unknown_name_lists_options(self):
        with pytest.raises(ValueError, match="IEEABR, EEABR, MinHop"):
            ProtocolKind.from_name("AODV")


class TestInitWeights:
    def test_single_neighbor_sink(self):
        p_dest, p_other = destination_init_weights(1)
        assert p_dest == Fraction(1)
        assert p_other == Fraction(0)

    def test_two_neighbors(self):
        assert destination_init_weights(2) == (Fraction(13, 16), Fraction(3, 16))

    def test_three_neighbors(self):
        assert destination_init_weights(3) == (Fraction(22, 36), Fraction(7, 36))

    def test_sums_to_one_exactly_up_to_fifty(self):
        # Rational identity: p_dest + (n-1) * p_other = 1 for every n.
        for n in range(1, 51):
            p_dest, p_other = destination_init_weights(n)
            assert p_dest + (n - 1) * p_other == 1


class TestTableInit:
    def test_uniform_probabilities(self):
        for n in (1, 4, 10):
            table = RoutingTable(owner=99, neighbors=range(n))
            table.init_uniform(destination=0)
            probs = table.probabilities(0)
            assert len(probs) == n
            for p in probs.values():
                assert p == pytest.approx(1.0 / n, rel=1e-12)
            assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)

    def test_destination_aware_with_adjacent_sink(self):
        table = RoutingTable(owner=0, neighbors=(1, 2, 3))
        table.init_destination_aware(destination=2)
        probs = table.probabilities(2)
        assert probs[2] == pytest.approx(22.0 / 36.0, rel=1e-12)
        assert probs[1] == pytest.approx(7.0 / 36.0, rel=1e-12)
        assert probs[3] == pytest.approx(7.0 / 36.0, rel=1e-12)

    def test_destination_aware_single_neighbor(self):
        table = RoutingTable(owner=0, neighbors=(5,))
        table.init_destination_aware(destination=5)
        assert table.probabilities(5) == {5: 1.0}

    def test_destination_aware_falls_back_to_uniform(self):
        table = RoutingTable(owner=0, neighbors=(1, 2, 3, 4))
        table.init_destination_aware(destination=9)  # sink not adjacent
        probs = table.probabilities(9)
        assert all(p == pytest.approx(0.25, rel=1e-12) for p in probs.values())

    def test_empty_neighbor_set_is_isolated(self):
        table = RoutingTable(owner=0, neighbors=())
        with pytest.raises(IsolatedNodeError):
            table.init_uniform(destination=1)
        with pytest.raises(IsolatedNodeError):
            table.init_destination_aware(destination=1)

    def test_sums_to_one_for_all_sizes(self):
        for n in range(1, 51):
            table = RoutingTable(owner=1000, neighbors=range(n))
            table.init_uniform(destination=-1)
            assert sum(table.probabilities(-1).values()) == pytest.approx(1.0, abs=1e-9)
            table2 = RoutingTable(owner=1000, neighbors=range(n))
            table2.init_destination_aware(destination=0)
            assert sum(table2.probabilities(0).values()) == pytest.approx(1.0, abs=1e-9)


class TestVisibility:
    def test_half_energy(self):
        assert visibility(1.0, 0.5) == pytest.approx(1.0 / (0.5 + 1e-6), rel=1e-12)

    def test_full_energy_hits_regularized_maximum(self):
        c = 2.0
        assert visibility(c, c) == pytest.approx(1.0 / (1e-6 * c), rel=1e-12)

    def test_empty_node_minimum(self):
        c = 2.0
        assert visibility(c, 0.0) == pytest.approx(1.0 / (c + 1e-6 * c), rel=1e-12)

    def test_strictly_increasing(self):
        values = [visibility(2.0, e / 100.0) for e in range(0, 201)]
        for a, b in zip(values, values[1:]):
            assert b > a

    def test_rejects_energy_outside_range(self):
        with pytest.raises(ValueError):
            visibility(1.0, 1.5)
        with pytest.raises(ValueError):
            visibility(1.0, -0.1)


def _make_ant(destination=9, memory=()):
    return ForwardAnt(ant_id=1, source=0, destination=destination, memory=tuple(memory))


class TestSelectNextHop:
    def test_single_candidate_always_chosen(self):
        table = RoutingTable(owner=0, neighbors=(1,))
        table.init_uniform(9)
        ant = _make_ant()
        rng = random.Random(0)
        for _ in range(20):
            assert select_next_hop(table, ant, {1: 1.0}, rng) == 1

    def test_memory_excluded(self):
        table = RoutingTable(owner=0, neighbors=(1, 2))
        table.init_uniform(9)
        ant = _make_ant(memory=(1,))
        rng = random.Random(0)
        for _ in range(50):
            assert select_next_hop(table, ant, {1: 1.0, 2: 1.0}, rng) == 2

    def test_all_neighbors_in_memory_is_dead_end(self):
        table = RoutingTable(owner=0, neighbors=(1, 2))
        table.init_uniform(9)
        ant = _make_ant(memory=(1, 2))
        with pytest.raises(DeadEndError):
            select_next_hop(table, ant, {1: 1.0, 2: 1.0}, random.Random(0))

    def test_two_to_one_pheromone_ratio_frequencies(self):
        # tau = (2, 1), equal energies, alpha = beta = 1: probabilities
        # (2/3, 1/3), checked against 1e5 seeded draws.
        table = RoutingTable(owner=0, neighbors=(1, 2))
        table.entries[9] = {1: 2.0, 2: 1.0}
        energies = {1: 1.0, 2: 1.0}
        rng = random.Random(42)
        draws = 100_000
        hits = sum(1 for _ in range(draws)
                   if select_next_hop(table, _make_ant(), energies, rng) == 1)
        assert hits / draws == pytest.approx(2.0 / 3.0, abs=0.01)

    def test_symmetric_instance_is_uniform(self):
        table = RoutingTable(owner=0, neighbors=(1, 2, 3, 4))
        table.init_uniform(9)
        energies = {n: 1.5 for n in (1, 2, 3, 4)}
        rng = random.Random(7)
        counts = {n: 0 for n in (1, 2, 3, 4)}
        draws = 40_000
        for _ in range(draws):
            counts[select_next_hop(table, _make_ant(), energies, rng)] += 1
        for count in counts.values():
            assert count / draws == pytest.approx(0.25, abs=0.01)

    def test_probability_vector_invariant_under_tau_scaling(self):
        # The selection rule is homogeneous of degree zero in pheromone.
        rng = random.Random(13)
        for _ in range(50):
            neighbors = tuple(range(1, rng.randint(3, 7)))
            taus = {n: rng.uniform(0.01, 5.0) for n in neighbors}
            energies = {n: rng.uniform(0.0, 2.0) for n in neighbors}
            alpha, beta = rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)
            table = RoutingTable(owner=0, neighbors=neighbors)
            table.entries[9] = dict(taus)
            base = table.probabilities(9, energies, alpha=alpha, beta=beta)
            factor = rng.uniform(0.1, 50.0)
            table.entries[9] = {n: t * factor for n, t in taus.items()}
            scaled = table.probabilities(9, energies, alpha=alpha, beta=beta)
            for n in neighbors:
                assert scaled[n] == pytest.approx(base[n], rel=1e-9)


class TestComputeDeposit:
    def test_equal_min_and_mean(self):
        # Ratio is exactly one regardless of hop count.
        assert compute_deposit(2.0, 1.0, 1.0, 0.5) == pytest.approx(1.0, rel=1e-12)

    def test_worked_example(self):
        # ratio = 0.3 / 0.6 = 0.5; deposit = 1 / 1.5
        assert compute_deposit(2.0, 0.5, 0.8, 0.2) == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_degenerate_denominator_clamps_to_max(self):
        stats = {}
        assert compute_deposit(2.0, 1.0, 1.0, 1.0, stats=stats) == 10.0
        assert stats["deposit_clamped"] == 1

    def test_non_positive_outer_denominator_clamps(self):
        # ratio above the initial energy level flips the denominator.
        stats = {}
        value = compute_deposit(2.0, 0.0, 1.0, 2.0, stats=stats)
        assert value == 10.0
        assert stats["deposit_clamped"] == 1

    def test_result_clamped_into_bounds(self):
        value = compute_deposit(2.0, 1.0, 1.0, 0.5, dtau_max=0.5)
        assert value == 0.5

    def test_rejects_mean_below_minimum(self):
        with pytest.raises(ValueError):
            compute_deposit(2.0, 1.0, 0.5, 0.2)


class TestBackwardUpdate:
    def _table(self):
        table = RoutingTable(owner=3, neighbors=(1, 2), tau_min=1e-4)
        table.entries[9] = {1: 1.0, 2: 1.0}
        return table

    def test_no_evaporation_no_deposit_is_identity(self):
        table = self._table()
        ant = BackwardAnt(ant_id=1, deposit=0.0, destination=9, hops_from_sink=2)
        apply_backward_update(table, ant, (3, 1), rho=0.0, phi=1.0)
        assert table.pheromone(9)[1] == 1.0

    def test_worked_example(self):
        # tau = 1, rho = 0.1, deposit = 0.5, phi = 1, Bd = 2 -> 1.15
        table = self._table()
        ant = BackwardAnt(ant_id=1, deposit=0.5, destination=9, hops_from_sink=2)
        new_tau = apply_backward_update(table, ant, (3, 1), rho=0.1, phi=1.0)
        assert new_tau == pytest.approx(1.15, rel=1e-12)

    def test_reinforcement_shrinks_with_hop_distance(self):
        deposits = []
        for bd in (1, 2, 3, 5, 8):
            table = self._table()
            ant = BackwardAnt(ant_id=1, deposit=1.0, destination=9, hops_from_sink=bd)
            deposits.append(apply_backward_update(table, ant, (3, 1), rho=0.0, phi=1.0) - 1.0)
        for bigger, smaller in zip(deposits, deposits[1:]):
            assert smaller < bigger

    def test_floor_at_tau_min(self):
        table = self._table()
        table.entries[9][1] = 2e-4
        ant = BackwardAnt(ant_id=1, deposit=1e-9, destination=9, hops_from_sink=1)
        new_tau = apply_backward_update(table, ant, (3, 1), rho=0.9, phi=1.0)
        assert new_tau == pytest.approx(1e-4)

    def test_missing_link_is_inconsistency(self):
        table = self._table()
        ant = BackwardAnt(ant_id=1, deposit=0.5, destination=9, hops_from_sink=1)
        with pytest.raises(ProtocolInconsistencyError):
            apply_backward_update(table, ant, (3, 7), rho=0.1, phi=1.0)

    def test_zero_hops_rejected(self):
        table = self._table()
        ant = BackwardAnt(ant_id=1, deposit=0.5, destination=9, hops_from_sink=0)
        with pytest.raises(ValueError):
            apply_backward_update(table, ant, (3, 1), rho=0.1, phi=1.0)

    def test_probabilities_sum_to_one_after_many_random_updates(self):
        rng = random.Random(99)
        tables = []
        for owner in range(10):
            neighbors = [n for n in range(10) if n != owner]
            table = RoutingTable(owner=owner, neighbors=neighbors)
            table.init_uniform(9)
            tables.append(table)
        for _ in range(10_000):
            owner = rng.randrange(10)
            neighbor = rng.choice(tables[owner].neighbors)
            ant = BackwardAnt(ant_id=0, deposit=rng.uniform(1e-6, 10.0), destination=9,
                              hops_from_sink=rng.randint(1, 6))
            apply_backward_update(tables[owner], ant, (owner, neighbor),
                                  rho=rng.uniform(0.0, 0.5), phi=1.0)
            assert sum(tables[owner].probabilities(9).values()) == pytest.approx(1.0, abs=1e-9)

    def test_pheromone_never_below_floor(self):
        rng = random.Random(5)
        table = RoutingTable(owner=0, neighbors=(1, 2, 3), tau_min=1e-4)
        table.init_uniform(9)
        for _ in range(5000):
            ant = BackwardAnt(ant_id=0, deposit=1e-6, destination=9,
                              hops_from_sink=rng.randint(1, 9))
            apply_backward_update(table, ant, (0, rng.choice((1, 2, 3))),
                                  rho=0.5, phi=1.0)
            assert all(tau >= 1e-4 for tau in table.pheromone(9).values())


class TestSplitPayload:
    def test_identity_split(self):
        raw = bytes(range(10))
        assert split_payload(raw, 1) == [raw]

    def test_balanced_sizes(self):
        raw = bytes(range(10))
        parts = split_payload(raw, 3)
        assert [len(p) for p in parts] == [4, 3, 3]
        assert reassemble(parts) == raw

    def test_more_parts_than_bytes(self):
        raw = b"abc"
        parts = split_payload(raw, 5)
        assert parts == [b"a", b"b", b"c", b"", b""]
        assert reassemble(parts) == raw

    def test_rejects_empty_payload(self):
        with pytest.raises(ValueError):
            split_payload(b"", 2)

    def test_rejects_zero_parts(self):
        with pytest.raises(ValueError):
            split_payload(b"abc", 0)

    @settings(max_examples=200, deadline=None)
    @given(raw=st.binary(min_size=1, max_size=4096), m=st.integers(1, 16))
    def test_round_trip(self, raw, m):
        parts = split_payload(raw, m)
        assert len(parts) == m
        assert reassemble(parts) == raw
        sizes = [len(p) for p in parts if p]
        if m <= len(raw):
            assert max(sizes) - min(sizes) <= 1


def _node_state(node_id, neighbors, sink=9, aware=False, params=None):
    return NodeState(node_id, neighbors, sink, params or AntParams(), destination_aware=aware)


class TestHandleForwardAnt:
    def test_first_visit_stores_record_and_increments_hops(self):
        state = _node_state(1, (0, 2, 9))
        ant = ForwardAnt(ant_id=7, source=0, destination=9)
        ant.observe_energy(2.0)
        ant.remember(0)
        outcome, nxt = state.handle_forward_ant(
            ant, now=0.0, came_from=0, node_energy=2.0,
            neighbor_energies={0: 2.0, 2: 2.0, 9: 2.0}, rng=random.Random(1))
        assert outcome is AntOutcome.FORWARDED
        assert nxt in (2, 9)  # node 0 is in the ant's memory
        assert ant.hops_so_far == 1
        record = state.records[7]
        assert record.previous_node == 0
        assert record.forward_node == nxt
        assert record.expires_at == pytest.approx(AntParams().record_timeout_s)

    def test_revisit_with_live_record_is_eliminated(self):
        state = _node_state(1, (0, 2))
        ant = ForwardAnt(ant_id=7, source=0, destination=9)
        state.handle_forward_ant(ant, 0.0, came_from=0, node_energy=2.0,
                                 neighbor_energies={0: 2.0, 2: 2.0}, rng=random.Random(1))
        outcome, _ = state.handle_forward_ant(ant, 1.0, came_from=2, node_energy=2.0,
                                              neighbor_energies={0: 2.0, 2: 2.0},
                                              rng=random.Random(1))
        assert outcome is AntOutcome.ELIMINATED

    def test_expired_record_no_longer_eliminates(self):
        state = _node_state(1, (0, 2))
        ant = ForwardAnt(ant_id=7, source=0, destination=9)
        state.handle_forward_ant(ant, 0.0, came_from=0, node_energy=2.0,
                                 neighbor_energies={0: 2.0, 2: 2.0}, rng=random.Random(1))
        later = AntParams().record_timeout_s + 1.0
        outcome, _ = state.handle_forward_ant(ant, later, came_from=2, node_energy=2.0,
                                              neighbor_energies={0: 2.0, 2: 2.0},
                                              rng=random.Random(1))
        assert outcome is AntOutcome.FORWARDED

    def test_arrival_at_destination(self):
        state = _node_state(9, (1, 2), sink=9)
        ant = ForwardAnt(ant_id=7, source=0, destination=9)
        outcome, nxt = state.handle_forward_ant(ant, 0.0, came_from=1, node_energy=2.0,
                                                neighbor_energies={1: 2.0, 2: 2.0},
                                                rng=random.Random(1))
        assert outcome is AntOutcome.ARRIVED
        assert nxt is None

    def test_dead_end_is_eliminated(self):
        state = _node_state(1, (0,))
        ant = ForwardAnt(ant_id=7, source=0, destination=9, memory=(0,))
        outcome, _ = state.handle_forward_ant(ant, 0.0, came_from=0, node_energy=2.0,
                                              neighbor_energies={0: 2.0}, rng=random.Random(1))
        assert outcome is AntOutcome.ELIMINATED

    def test_statistics_track_minimum_and_mean(self):
        ant = ForwardAnt(ant_id=1, source=0, destination=9)
        for energy in (2.0, 1.0, 1.5):
            ant.observe_energy(energy)
        assert ant.min_energy_seen == 1.0
        assert ant.avg_energy_accumulator == pytest.approx(1.5)

    def test_memory_keeps_last_two(self):
        ant = ForwardAnt(ant_id=1, source=0, destination=9)
        for node in (0, 1, 2, 3):
            ant.remember(node)
        assert ant.memory == (2, 3)


def _packet(next_node, seq=1, dest=9, part=b"x", index=1, total=1, message=1):
    return DataPacket("data", next_node, seq, visited_count=0, payload_part=part,
                      source=0, destination=dest, message_id=message,
                      part_index=index, total_parts=total)


class TestHandleDataPacket:
    def test_foreign_address_discarded_overheard(self):
        state = _node_state(1, (0, 2))
        outcome, _ = state.handle_data_packet(_packet(next_node=2), {0: 2.0, 2: 2.0})
        assert outcome is DataOutcome.DISCARDED_OVERHEARD
        assert not state.seen_parts

    def test_delivery_at_sink(self):
        state = _node_state(9, (1,), sink=9)
        pkt = _packet(next_node=9, part=b"hello", total=1)
        outcome, _ = state.handle_data_packet(pkt, {1: 2.0})
        assert outcome is DataOutcome.DELIVERED
        assert state.completed_message(1, 1) == b"hello"

    def test_forwarding_increments_visited_count(self):
        state = _node_state(1, (0, 2), sink=9)
        state.table.entries[9] = {0: 0.2, 2: 0.8}
        pkt = _packet(next_node=1)
        outcome, nxt = state.handle_data_packet(pkt, {0: 2.0, 2: 2.0})
        assert outcome is DataOutcome.FORWARDED
        assert nxt == 2
        assert pkt.next_node == 2
        assert pkt.visited_count == 1

    def test_duplicate_sequence_discarded(self):
        state = _node_state(1, (0, 2), sink=9)
        pkt = _packet(next_node=1, seq=5)
        state.handle_data_packet(pkt, {0: 2.0, 2: 2.0})
        pkt2 = _packet(next_node=1, seq=5)
        outcome, _ = state.handle_data_packet(pkt2, {0: 2.0, 2: 2.0})
        assert outcome is DataOutcome.DISCARDED_DUPLICATE

    def test_argmax_ties_break_to_lowest_id(self):
        state = _node_state(1, (4, 2, 7), sink=9)
        state.table.entries[9] = {4: 0.5, 2: 0.5, 7: 0.5}
        energies = {4: 1.0, 2: 1.0, 7: 1.0}
        assert state.choose_data_next_hop(energies) == 2

    def test_no_admissible_neighbor(self):
        state = _node_state(1, (0,), sink=9)
        outcome, _ = state.handle_data_packet(_packet(next_node=1), {})
        assert outcome is DataOutcome.DISCARDED_NO_ROUTE

    def test_reassembly_in_index_order(self):
        state = _node_state(9, (1,), sink=9)
        parts = split_payload(b"abcdefghij", 3)
        for index in (3, 1, 2):  # arrival order differs from index order
            pkt = _packet(next_node=9, seq=10 + index, part=parts[index - 1],
                          index=index, total=3)
            state.handle_data_packet(pkt, {1: 2.0})
        assert state.completed_message(1, 3) == b"abcdefghij"


def _all_shortest_paths(adjacency, source, sink):
    """Brute-force enumeration of every shortest simple path."""
    best, found = None, []
    stack = [(source, [source])]
    while stack:
        node, path = stack.pop()
        if node == sink:
            if best is None or len(path) < best:
                best, found = len(path), [path]
            elif len(path) == best:
                found.append(path)
            continue
        if best is not None and len(path) >= best:
            continue
        for nbr in adjacency[node]:
            if nbr not in path:
                stack.append((nbr, path + [nbr]))
    return found


class TestMinHopRoute:
    def test_adjacent_pair(self):
        assert min_hop_route({0: (1,), 1: (0,)}, 0, 1) == [0, 1]

    def test_three_node_line(self):
        adjacency = {0: (1,), 1: (0, 2), 2: (1,)}
        assert min_hop_route(adjacency, 0, 2) == [0, 1, 2]

    def test_tie_breaks_to_lexicographically_smallest(self):
        # Square: 0-1-3 and 0-2-3 both shortest; 0-1-3 wins.
        adjacency = {0: (1, 2), 1: (0, 3), 2: (0, 3), 3: (1, 2)}
        assert min_hop_route(adjacency, 0, 3) == [0, 1, 3]

    def test_disconnection_raises(self):
        adjacency = {0: (1,), 1: (0,), 2: (3,), 3: (2,)}
        with pytest.raises(RouteNotFoundError):
            min_hop_route(adjacency, 0, 3)

    def test_against_brute_force_on_random_graphs(self):
        rng = random.Random(17)
        for _ in range(150):
            n = rng.randint(3, 8)
            adjacency = {i: set() for i in range(n)}
            for i in range(n):
                for j in range(i + 1, n):
                    if rng.random() < 0.45:
                        adjacency[i].add(j)
                        adjacency[j].add(i)
            adjacency = {i: tuple(sorted(s)) for i, s in adjacency.items()}
            source, sink = 0, n - 1
            shortest = _all_shortest_paths(adjacency, source, sink)
            if not shortest:
                with pytest.raises(RouteNotFoundError):
                    min_hop_route(adjacency, source, sink)
                continue
            assert min_hop_route(adjacency, source, sink) == min(shortest)


class TestMinHopRouter:
    def test_next_hop_walks_the_route(self):
        adjacency = {0: (1,), 1: (0, 2), 2: (1, 3), 3: (2,)}
        router = MinHopRouter(adjacency, sink=3)
        assert router.next_hop(0) == 1
        assert router.next_hop(1) == 2
        assert router.next_hop(2) == 3

    def test_recomputes_after_death(self):
        # Square again: after node 1 dies the route detours through 2.
        adjacency = {0: (1, 2), 1: (0, 3), 2: (0, 3), 3: (1, 2)}
        router = MinHopRouter(adjacency, sink=3)
        assert router.next_hop(0) == 1
        router.node_died(1)
        assert router.next_hop(0) == 2

    def test_disconnection_after_death(self):
        adjacency = {0: (1,), 1: (0, 2), 2: (1,)}
        router = MinHopRouter(adjacency, sink=2)
        router.node_died(1)
        with pytest.raises(RouteNotFoundError):
            router.next_hop(0)


class TestLoopFreedom:
    def test_line_exhaustively(self):
        from antwalk import explore_all_ant_walks
        adjacency = {0: (1,), 1: (0, 2), 2: (1,)}
        assert explore_all_ant_walks(adjacency, 0, 2) >= 1

    def test_all_four_node_graphs_exhaustively(self):
        from antwalk import connected_graphs, explore_all_ant_walks
        for adjacency in connected_graphs(4):
            for source in range(3):
                explore_all_ant_walks(adjacency, source, sink=3)

    def test_triangle_allows_revisit_only_via_elimination(self):
        # With two-entry memory an ant can walk back to a visited node,
        # where the stored record eliminates it before any edge repeats.
        from antwalk import explore_all_ant_walks
        adjacency = {0: (1, 2, 3), 1: (0, 2, 3), 2: (0, 1, 3), 3: (0, 1, 2)}
        assert explore_all_ant_walks(adjacency, 0, 3) > 3
