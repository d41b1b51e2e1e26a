"""Exact binary MAP labeling via an s-t min cut.

Each pairwise table [[A, B], [C, D]] with A + D <= B + C decomposes as

    E(x1, x2) = A + (C - A) x1 + (D - C) x2 + (B + C - A - D)(1 - x1) x2

so the energy becomes terminal arcs (per-site net coefficients) plus one
site-to-site arc per pair, all with non-negative capacity. With the
convention x = 0 for the source side, the capacity of any s/t cut equals
the (quantized) energy of the induced labeling minus a fixed offset, hence
a minimum cut is a minimum-energy labeling. Capacities are integers so the
augmenting-path solver terminates and conservation checks are exact; the
returned labeling is re-evaluated in unquantized energy and polished by
single-site flips, which removes any quantization-induced misordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .mrf import REPRESENTABILITY_TOL, EnergyGraph

# Quantization scale is 2**bits / (largest absolute energy entry), with bits
# capped so the worst-case sum of all quantized terms stays far below 2**63.
_MAX_QUANT_BITS = 48
_INT_HEADROOM_BITS = 62


@dataclass
class FlowNetwork:
    """Capacitated directed graph in adjacency-list arrays.

    Arcs are stored in pairs: arc a and arc a^1 are mutual reverses.
    ``arc_cap`` holds residual capacities and is mutated by ``max_flow``;
    ``arc_cap0`` keeps the original capacities for cut/conservation checks.
    """

    num_nodes: int
    source: int
    sink: int
    arc_to: np.ndarray
    arc_cap: np.ndarray
    arc_cap0: np.ndarray
    head: np.ndarray
    nxt: np.ndarray

    @classmethod
    def from_arcs(cls, num_nodes: int, source: int, sink: int, arcs) -> "FlowNetwork":
        """Build a network from (tail, head, capacity) triples (integer capacities)."""
        m = 2 * len(arcs)
        arc_to = np.empty(m, dtype=np.int64)
        arc_cap = np.empty(m, dtype=np.int64)
        head = np.full(num_nodes, -1, dtype=np.int64)
        nxt = np.empty(m, dtype=np.int64)
        k = 0
        for u, v, cap in arcs:
            if cap < 0:
                raise ValueError(f"negative capacity {cap} on arc ({u}, {v})")
            for tail, to, c in ((u, v, cap), (v, u, 0)):
                arc_to[k] = to
                arc_cap[k] = c
                nxt[k] = head[tail]
                head[tail] = k
                k += 1
        return cls(num_nodes, source, sink, arc_to, arc_cap, arc_cap.copy(), head, nxt)

    def arc_tail(self, a: int) -> int:
        return int(self.arc_to[a ^ 1])

    def flow_on(self, a: int) -> int:
        """Net flow pushed along arc a (may be negative if the reverse carried flow)."""
        return int(self.arc_cap0[a] - self.arc_cap[a])


@dataclass(frozen=True)
class QuantizationRecord:
    """How float energies were mapped to integer capacities."""

    scale: float
    offset: int
    bits: int


def _dinic(head, nxt, arc_to, cap, source, sink):
    # Shortest-augmenting-path max flow: BFS level graph + DFS blocking flow
    # with the current-arc optimization. Returns (flow, last BFS levels);
    # nodes with level >= 0 are the source side of a minimum cut.
    n = head.shape[0]
    level = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    cur = np.empty(n, np.int64)
    path = np.empty(n, np.int64)
    total = 0
    while True:
        for i in range(n):
            level[i] = -1
        level[source] = 0
        queue[0] = source
        qh, qt = 0, 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            a = head[u]
            while a != -1:
                if cap[a] > 0:
                    v = arc_to[a]
                    if level[v] < 0:
                        level[v] = level[u] + 1
                        queue[qt] = v
                        qt += 1
                a = nxt[a]
        if level[sink] < 0:
            return total, level
        for i in range(n):
            cur[i] = head[i]
        while True:
            u = source
            top = 0
            reached = False
            while True:
                if u == sink:
                    reached = True
                    break
                a = cur[u]
                advanced = False
                while a != -1:
                    v = arc_to[a]
                    if cap[a] > 0 and level[v] == level[u] + 1:
                        path[top] = a
                        top += 1
                        u = v
                        advanced = True
                        break
                    a = nxt[a]
                    cur[u] = a
                if not advanced:
                    level[u] = -1  # dead end for this phase
                    if u == source:
                        break
                    top -= 1
                    u = arc_to[path[top] ^ 1]
            if not reached:
                break
            bottleneck = cap[path[0]]
            for i in range(1, top):
                if cap[path[i]] < bottleneck:
                    bottleneck = cap[path[i]]
            for i in range(top):
                a = path[i]
                cap[a] -= bottleneck
                cap[a ^ 1] += bottleneck
            total += bottleneck


_dinic_impl = _accel.accelerate(_dinic)


def max_flow(network: FlowNetwork) -> tuple[int, np.ndarray]:
    """Solve the network in place; returns (flow value, source-side mask per node)."""
    flow, level = _dinic_impl(
        network.head, network.nxt, network.arc_to, network.arc_cap,
        network.source, network.sink,
    )
    return int(flow), level >= 0


def build_flow_network(energy: EnergyGraph) -> tuple[FlowNetwork, QuantizationRecord]:
    """Reduce a binary energy to a flow network with integer capacities.

    Sites are nodes 0..U-1, the source is node U, the sink node U+1. For
    every labeling x (x_k = 0 iff site k on the source side), the capacity
    of the corresponding cut equals quantized_energy(x) - offset.
    """
    if energy.num_labels != 2:
        raise ValueError(f"min-cut reduction needs a binary energy, got Q={energy.num_labels}")
    t = energy.tables
    if energy.num_pairs:
        slack = t[:, 0, 1] + t[:, 1, 0] - t[:, 0, 0] - t[:, 1, 1]
        bad = np.flatnonzero(slack < -REPRESENTABILITY_TOL)
        if len(bad):
            p = int(bad[0])
            raise ValueError(
                f"pairwise energy at sites ({int(energy.pair_i[p])}, {int(energy.pair_j[p])}) "
                f"violates the min-cut condition (slack {slack[p]:.3e})"
            )

    u = energy.num_sites
    n_terms = u + energy.num_pairs + 1
    bits = min(_MAX_QUANT_BITS, _INT_HEADROOM_BITS - max(1, math.ceil(math.log2(n_terms + 1))))
    # floor keeps the scale finite for (near-)zero energies
    max_abs = max(
        float(np.abs(energy.unary).max(initial=0.0)),
        float(np.abs(t).max(initial=0.0)),
        2.0**bits * 1e-300,
    )
    scale = 2.0**bits / max_abs

    qu = np.rint(energy.unary * scale).astype(np.int64)
    # Diagonals rounded down, off-diagonals up: keeps every pairwise arc
    # capacity non-negative without clamping (error < 1 quantum per entry).
    qa = np.floor(t[:, 0, 0] * scale).astype(np.int64)
    qd = np.floor(t[:, 1, 1] * scale).astype(np.int64)
    qb = np.ceil(t[:, 0, 1] * scale).astype(np.int64)
    qc = np.ceil(t[:, 1, 0] * scale).astype(np.int64)
    pair_cap = np.maximum(qb + qc - qa - qd, 0)  # < 0 only within the tolerance band

    theta = (qu[:, 1] - qu[:, 0]).copy()
    offset = int(qu[:, 0].sum())
    if energy.num_pairs:
        np.add.at(theta, energy.pair_i, qc - qa)
        np.add.at(theta, energy.pair_j, qd - qc)
        offset += int(qa.sum())
    offset += int(theta[theta < 0].sum())

    source, sink = u, u + 1
    arcs = []
    for k in range(u):
        if theta[k] > 0:
            arcs.append((source, k, int(theta[k])))
        elif theta[k] < 0:
            arcs.append((k, sink, int(-theta[k])))
    for p in range(energy.num_pairs):
        if pair_cap[p] > 0:
            arcs.append((int(energy.pair_i[p]), int(energy.pair_j[p]), int(pair_cap[p])))
    network = FlowNetwork.from_arcs(u + 2, source, sink, arcs)
    return network, QuantizationRecord(scale=scale, offset=offset, bits=bits)


def _flip_polish(energy: EnergyGraph, labels: np.ndarray) -> np.ndarray:
    # Greedy single-site flips in unquantized energy; a global optimum
    # admits none, so this only repairs quantization near-ties.
    labels = labels.copy()
    u = energy.num_sites
    rng_sites = np.arange(u)
    while True:
        cur = labels - 1
        alt = 1 - cur
        delta = energy.unary[rng_sites, alt] - energy.unary[rng_sites, cur]
        if energy.num_pairs:
            pr = np.arange(energy.num_pairs)
            ci, cj = cur[energy.pair_i], cur[energy.pair_j]
            now = energy.tables[pr, ci, cj]
            np.add.at(delta, energy.pair_i, energy.tables[pr, 1 - ci, cj] - now)
            np.add.at(delta, energy.pair_j, energy.tables[pr, ci, 1 - cj] - now)
        k = int(np.argmin(delta))
        if delta[k] >= 0.0:
            return labels
        labels[k] = 3 - labels[k]  # flip 1 <-> 2


def binary_map(energy: EnergyGraph) -> np.ndarray:
    """Minimum-energy binary labeling (source side = class 1)."""
    network, _ = build_flow_network(energy)
    _, source_side = max_flow(network)
    labels = np.where(source_side[: energy.num_sites], 1, 2).astype(np.int64)
    return _flip_polish(energy, labels)


def cut_capacity(network: FlowNetwork, source_side: np.ndarray) -> int:
    """Total original capacity of arcs from the source side to the sink side."""
    tails = network.arc_to[np.arange(len(network.arc_to)) ^ 1]
    crossing = source_side[tails] & ~source_side[network.arc_to]
    return int(network.arc_cap0[crossing].sum())


def node_balances(network: FlowNetwork) -> np.ndarray:
    """Net outflow per node under the current flow (exact integer arithmetic)."""
    balance = np.zeros(network.num_nodes, dtype=np.int64)
    even = np.arange(0, len(network.arc_to), 2)
    net = network.arc_cap0[even] - network.arc_cap[even]  # signed flow tail -> head
    np.add.at(balance, network.arc_to[even ^ 1], net)
    np.add.at(balance, network.arc_to[even], -net)
    return balance
