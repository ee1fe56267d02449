"""Static decode-order selection for noise recycling.

Channels plus an artificial zero node form a directed graph: zero-node
edges carry each channel's raw SNR, and a cross edge (i, j) carries the
effective SNR channel j would see when recycling channel i's noise
estimate.  A maximum-weight arborescence rooted at the zero node therefore
maximizes the total effective SNR over all single-decode orders; its BFS
traversal is the decode order.

Node ids follow the graph convention: node 0 is the zero node and node j
(1-based) is channel j, i.e. channel index j - 1 elsewhere in the package.

Ties are broken deterministically.  The solver prefers, per node, the
incoming edge with the smallest (source, target) pair among weight ties;
the brute-force oracle prefers the lexicographically smallest parent
vector among equal-total plans.  Both agree on the supported structured
instances and always agree on the optimal total.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel
from .recycling import effective_snr

__all__ = [
    "RecycleGraph",
    "RecyclingPlan",
    "build_recycle_graph",
    "constrain_root_child",
    "max_arborescence",
    "brute_force_plan",
    "bfs_order",
]


@dataclass(frozen=True)
class RecycleGraph:
    """(m+1) x (m+1) weight matrix; NaN marks absent edges.

    Row i, column j holds the weight of edge i -> j.  The zero node (0) has
    no incoming edges and there are no self-loops.
    """

    node_count: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.node_count, self.node_count):
            raise ValueError("weights must be (m+1) x (m+1)")
        if not np.isnan(w[:, 0]).all():
            raise ValueError("the zero node cannot have incoming edges")
        if not np.isnan(np.diag(w)).all():
            raise ValueError("self-loops are not allowed")
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.node_count - 1

    def edges(self) -> list[tuple[int, int, float]]:
        out = []
        for i in range(self.node_count):
            for j in range(1, self.node_count):
                if i != j and not np.isnan(self.weights[i, j]):
                    out.append((i, j, float(self.weights[i, j])))
        return out


@dataclass(frozen=True)
class RecyclingPlan:
    """Arborescence over channels: parent[j-1] is the parent node of channel j."""

    parent: tuple[int, ...]
    order: tuple[int, ...]
    total_snr: float

    def __post_init__(self) -> None:
        m = len(self.parent)
        if sorted(self.order) != list(range(1, m + 1)):
            raise ValueError("order must be a permutation of channels 1..m")
        seen_pos = {ch: pos for pos, ch in enumerate(self.order)}
        for ch in range(1, m + 1):
            p = self.parent[ch - 1]
            if not 0 <= p <= m or p == ch:
                raise ValueError(f"invalid parent {p} for channel {ch}")
            if p != 0 and seen_pos[p] > seen_pos[ch]:
                raise ValueError(f"channel {ch} ordered before its parent {p}")
        # reachability from the zero node (no cycles)
        for ch in range(1, m + 1):
            hops, node = 0, ch
            while node != 0:
                node = self.parent[node - 1]
                hops += 1
                if hops > m:
                    raise ValueError("parent links contain a cycle")

    @property
    def m(self) -> int:
        return len(self.parent)

    def parent_of(self, channel: int) -> int:
        return self.parent[channel - 1]

    def children_of(self, node: int) -> list[int]:
        return [ch for ch in range(1, self.m + 1) if self.parent[ch - 1] == node]


def build_recycle_graph(model: ChannelModel) -> RecycleGraph:
    """Zero-node edges carry raw SNRs, cross edges recycled effective SNRs."""
    m = model.m
    w = np.full((m + 1, m + 1), np.nan)
    for j in range(1, m + 1):
        w[0, j] = effective_snr(model, j - 1)
        for i in range(1, m + 1):
            if i != j:
                w[i, j] = effective_snr(model, j - 1, i - 1)  # raises on |rho| = 1
    return RecycleGraph(node_count=m + 1, weights=w)


def constrain_root_child(graph: RecycleGraph, channel: int) -> RecycleGraph:
    """Drop all zero-node edges except 0 -> channel (forced-lead variant)."""
    if not 1 <= channel <= graph.m:
        raise ValueError("channel out of range")
    w = graph.weights.copy()
    for j in range(1, graph.node_count):
        if j != channel:
            w[0, j] = np.nan
    return RecycleGraph(node_count=graph.node_count, weights=w)


def _order_total(graph: RecycleGraph, parent: tuple[int, ...]) -> float:
    # fixed ascending-channel summation order so equal plans give equal floats
    return float(sum(graph.weights[parent[ch - 1], ch] for ch in range(1, graph.m + 1)))


def _plan_from_parent(graph: RecycleGraph, parent: tuple[int, ...]) -> RecyclingPlan:
    return RecyclingPlan(parent=parent, order=bfs_order_from_parent(parent),
                         total_snr=_order_total(graph, parent))


def max_arborescence(graph: RecycleGraph) -> RecyclingPlan:
    """Maximum-weight arborescence rooted at the zero node.

    Runs the classic minimum-arborescence contraction algorithm on negated
    weights.  Cycle contraction is iterative with an explicit expansion
    stack, so deep chains cannot hit recursion limits.
    """
    m = graph.m
    if m == 0:
        raise ValueError("graph has no channels")
    orig_edges = [(u, v, -w) for (u, v, w) in graph.edges()]
    for j in range(1, m + 1):
        if not any(v == j for (_, v, _) in orig_edges):
            raise ValueError(f"channel {j} has no incoming edge")

    # Edge records: [tail, head, modified_weight, orig_id]; tie keys use the
    # original endpoints so contraction cannot perturb the documented order.
    records = [[u, v, w, eid] for eid, (u, v, w) in enumerate(orig_edges)]
    next_node = m + 1
    levels: list[tuple[int, list[int], dict[int, list], dict[int, int]]] = []

    while True:
        best_in: dict[int, list] = {}
        for rec in records:
            u, v, w, eid = rec
            key = (w, orig_edges[eid][0], orig_edges[eid][1])
            cur = best_in.get(v)
            if cur is None or key < (cur[2], orig_edges[cur[3]][0], orig_edges[cur[3]][1]):
                best_in[v] = rec

        cycle = _find_cycle({v: rec[0] for v, rec in best_in.items()})
        if cycle is None:
            break

        c_id = next_node
        next_node += 1
        cyc_set = set(cycle)
        cycle_edge = {v: best_in[v] for v in cycle}
        entry_of: dict[int, int] = {}

        merged: dict[tuple[int, int], list] = {}
        for rec in records:
            u, v, w, eid = rec
            in_u, in_v = u in cyc_set, v in cyc_set
            if in_u and in_v:
                continue
            if in_v:
                new = [u, c_id, w - cycle_edge[v][2], eid]
                entry = v
            elif in_u:
                new = [c_id, v, w, eid]
                entry = None
            else:
                new = rec
                entry = None
            pair = (new[0], new[1])
            kept = merged.get(pair)
            new_key = (new[2], orig_edges[new[3]][0], orig_edges[new[3]][1])
            if kept is None or new_key < (kept[2], orig_edges[kept[3]][0], orig_edges[kept[3]][1]):
                merged[pair] = new
                if entry is not None:
                    entry_of[eid] = entry
            elif entry is not None and eid not in entry_of:
                entry_of[eid] = entry
        records = list(merged.values())
        levels.append((c_id, cycle, cycle_edge, entry_of))

    chosen: dict[int, list] = dict(best_in)
    for c_id, cycle, cycle_edge, entry_of in reversed(levels):
        rec = chosen.pop(c_id)
        member = entry_of[rec[3]]
        chosen[member] = rec
        for v in cycle:
            if v != member:
                chosen[v] = cycle_edge[v]

    parent = [0] * m
    for j in range(1, m + 1):
        parent[j - 1] = orig_edges[chosen[j][3]][0]
    return _plan_from_parent(graph, tuple(parent))


def _find_cycle(successor: dict[int, int]) -> list[int] | None:
    visited: set[int] = set()
    for start in successor:
        if start in visited:
            continue
        path: list[int] = []
        node = start
        while node in successor and node not in visited:
            visited.add(node)
            path.append(node)
            node = successor[node]
        if node in path:
            return path[path.index(node):]
    return None


def brute_force_plan(graph: RecycleGraph) -> RecyclingPlan:
    """Exhaustive arborescence enumeration (m <= 6); oracle for the solver.

    Among maximum-total plans the lexicographically smallest parent vector
    wins, which per channel means the lowest usable source index.
    """
    m = graph.m
    if m > 6:
        raise ValueError("brute force enumeration limited to m <= 6")
    candidates_per_channel = []
    for j in range(1, m + 1):
        sources = [i for i in range(m + 1)
                   if i != j and not np.isnan(graph.weights[i, j])]
        if not sources:
            raise ValueError(f"channel {j} has no incoming edge")
        candidates_per_channel.append(sorted(sources))

    best: tuple[float, tuple[int, ...]] | None = None
    for parent in itertools.product(*candidates_per_channel):
        if not _is_arborescence(parent):
            continue
        total = _order_total(graph, parent)
        if best is None or total > best[0] or (total == best[0] and parent < best[1]):
            best = (total, parent)
    assert best is not None  # the zero-node star is always feasible
    return _plan_from_parent(graph, best[1])


def _is_arborescence(parent: tuple[int, ...]) -> bool:
    m = len(parent)
    for ch in range(1, m + 1):
        hops, node = 0, ch
        while node != 0:
            node = parent[node - 1]
            hops += 1
            if hops > m:
                return False
    return True


def bfs_order_from_parent(parent: tuple[int, ...]) -> tuple[int, ...]:
    m = len(parent)
    children: dict[int, list[int]] = {i: [] for i in range(m + 1)}
    for ch in range(1, m + 1):
        children[parent[ch - 1]].append(ch)
    order: list[int] = []
    queue = sorted(children[0])
    while queue:
        ch = queue.pop(0)
        order.append(ch)
        queue.extend(sorted(children[ch]))
    return tuple(order)


def bfs_order(plan: RecyclingPlan) -> tuple[int, ...]:
    """Decode order: zero-node children first (ascending), then level by level."""
    return bfs_order_from_parent(plan.parent)
