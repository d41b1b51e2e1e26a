from itertools import product

import numpy as np
import pytest

from _instances import random_ssl_instance
from coxcut import (
    EnergyGraph,
    FlowNetwork,
    binary_map,
    brute_force_map,
    build_flow_network,
    cut_capacity,
    energy_of,
    max_flow,
    node_balances,
)


def _energy(unary, pairs=None, constant=0.0):
    unary = np.asarray(unary, dtype=float)
    q = unary.shape[1]
    if pairs:
        pi = np.array([p[0] for p in pairs])
        pj = np.array([p[1] for p in pairs])
        tables = np.array([p[2] for p in pairs], dtype=float)
    else:
        pi = pj = np.empty(0, dtype=np.int64)
        tables = np.empty((0, q, q))
    return EnergyGraph(unary, pi, pj, tables, constant)


class TestRawNetworks:
    def test_single_arc(self):
        net = FlowNetwork.from_arcs(2, 0, 1, [(0, 1, 7)])
        flow, side = max_flow(net)
        assert flow == 7
        assert side.tolist() == [True, False]

    def test_two_disjoint_unit_paths(self):
        arcs = [(0, 1, 1), (1, 3, 1), (0, 2, 1), (2, 3, 1)]
        net = FlowNetwork.from_arcs(4, 0, 3, arcs)
        flow, _ = max_flow(net)
        assert flow == 2

    def test_negative_capacity_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            FlowNetwork.from_arcs(2, 0, 1, [(0, 1, -1)])

    def test_random_networks_match_exhaustive_cut(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = 10  # source 0, sink 9, 8 inner nodes
            arcs = []
            for u in range(n):
                for v in range(n):
                    if u != v and rng.random() < 0.3:
                        arcs.append((u, v, int(rng.integers(0, 20))))
            net = FlowNetwork.from_arcs(n, 0, n - 1, arcs)
            flow, side = max_flow(net)
            # oracle: enumerate all 2^8 partitions of the inner nodes
            best = None
            for bits in product([True, False], repeat=n - 2):
                s_side = np.array([True, *bits, False])
                cost = sum(c for (u, v, c) in arcs if s_side[u] and not s_side[v])
                best = cost if best is None else min(best, cost)
            assert flow == best
            assert cut_capacity(net, side) == flow


class TestBuildFlowNetwork:
    def test_zero_energy_all_zero_capacities(self):
        energy = _energy(np.zeros((3, 2)), pairs=[(0, 1, np.zeros((2, 2)))])
        net, rec = build_flow_network(energy)
        assert net.arc_cap0.sum() == 0
        flow, _ = max_flow(net)
        assert flow == 0 and rec.offset == 0

    def test_single_site_unary_cut(self):
        energy = _energy([[0.0, -3.0]])
        net, rec = build_flow_network(energy)
        flow, side = max_flow(net)
        assert flow == 0
        assert not side[0]  # sink side, label 2
        assert binary_map(energy).tolist() == [2]

    def test_cut_costs_enumerate_to_quantized_energy(self):
        # two sites, hand-built: every labeling's cut equals quantized energy - offset
        table = np.array([[-2.0, 0.0], [0.0, -2.0]])
        energy = _energy([[0.0, -1.0], [0.0, -1.0]], pairs=[(0, 1, table)])
        net, rec = build_flow_network(energy)
        for labs in product([1, 2], repeat=2):
            side = np.array([lab == 1 for lab in labs] + [True, False])
            cut = cut_capacity(net, side)
            true_e = energy_of(energy, list(labs))
            assert abs((cut + rec.offset) / rec.scale - true_e) <= 4 * 0.5 / rec.scale

    def test_representability_violation_names_pair(self):
        bad = np.array([[-1.0, -3.0], [-3.0, -1.0]])
        energy = _energy(np.zeros((3, 2)), pairs=[(1, 2, bad)])
        with pytest.raises(ValueError, match=r"\(1, 2\)"):
            build_flow_network(energy)

    def test_multiclass_rejected(self):
        with pytest.raises(ValueError, match="binary"):
            build_flow_network(_energy(np.zeros((2, 3))))


class TestBinaryMap:
    def test_single_site_matches_brute_force(self):
        for col in ([0.0, -3.0], [1.0, 2.0], [0.25, 0.75]):
            energy = _energy([col])
            assert binary_map(energy).tolist() == brute_force_map(energy)[0].tolist()

    def test_exact_tie_both_labelings_optimal(self):
        energy = _energy([[-0.5, -0.5]])
        lab = binary_map(energy)
        assert energy_of(energy, lab) == brute_force_map(energy)[1]

    def test_random_instances_match_brute_force_energy_exactly(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            *_, energy = random_ssl_instance(rng, q=2)
            mc = binary_map(energy)
            bf_lab, bf_e = brute_force_map(energy)
            assert energy_of(energy, mc) == bf_e
            assert np.array_equal(mc, bf_lab)  # unique minimum a.s. for random data

    def test_map_beats_random_labelings(self):
        rng = np.random.default_rng(2)
        *_, energy = random_ssl_instance(rng, q=2, max_unlabeled=12)
        e_star = energy_of(energy, binary_map(energy))
        for _ in range(1000):
            y = rng.integers(1, 3, energy.num_sites)
            assert e_star <= energy_of(energy, y) + 1e-12


class TestDualityConservation:
    def test_flow_equals_cut_and_conservation_holds(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            *_, energy = random_ssl_instance(rng, q=2)
            net, _ = build_flow_network(energy)
            flow, side = max_flow(net)
            assert cut_capacity(net, side) == flow
            balance = node_balances(net)
            inner = np.delete(balance, [net.source, net.sink])
            assert np.all(inner == 0)
            assert balance[net.source] == flow
            assert balance[net.sink] == -flow


class TestQuantizationSoundness:
    def test_energy_error_bound_over_all_labelings(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            *_, energy = random_ssl_instance(rng, q=2, max_unlabeled=8)
            net, rec = build_flow_network(energy)
            u = energy.num_sites
            bound = u * u * 0.5 / rec.scale
            for labs in product([1, 2], repeat=u):
                side = np.array([lab == 1 for lab in labs] + [True, False])
                cut = cut_capacity(net, side)
                quantized = (cut + rec.offset) / rec.scale
                true_e = energy_of(energy, list(labs)) - energy.constant
                assert abs(quantized - true_e) <= bound
