"""Optimal strategy search by node and edge elimination.

The graph is shrunk with two cost-preserving rewrites until neither applies:

* node elimination folds a layer with exactly one in-edge and one out-edge
  into a new edge whose table is the min-plus product through that layer;
* edge elimination merges two parallel edges by adding their tables.

The small remaining graph is solved exhaustively and the eliminations are
undone in reverse, reading each folded layer's best config from the argmin
table stored when it was removed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from . import kernels
from .cost import CostTables, Strategy, build_cost_tables, evaluate_strategy
from .errors import BudgetExceededError, ReductionLimitError
from .graph import ComputationGraph, DeviceGraph

DEFAULT_K_BOUND = 8
FINAL_SPACE_LIMIT = 10**7


@dataclass(frozen=True)
class NodeElim:
    removed: str
    src: str
    dst: str
    in_edge: str
    out_edge: str
    new_edge: str
    argmin: np.ndarray = field(repr=False)  # [c_src, c_dst] -> best config index of `removed`


@dataclass(frozen=True)
class EdgeElim:
    e1: str
    e2: str
    new_edge: str


EliminationRecord = Union[NodeElim, EdgeElim]


class ReducedGraph:
    """Live multigraph plus its cost tables, rewritten by eliminations.

    Instances are treated as values: the elimination functions return new
    objects and never mutate their argument.  Tables are shared, never written.
    """

    def __init__(
        self,
        nodes: Mapping[str, np.ndarray],
        edges: Mapping[str, tuple[str, str]],
        xfer: Mapping[str, np.ndarray],
        rank: Mapping[str, int] | None = None,
        seq: Mapping[str, int] | None = None,
        log: tuple[EliminationRecord, ...] = (),
    ):
        self.node_cost = dict(nodes)
        self.edges = dict(edges)
        self.xfer = dict(xfer)
        self.rank = dict(rank) if rank is not None else {n: i for i, n in enumerate(self.node_cost)}
        self.seq = dict(seq) if seq is not None else {e: i for i, e in enumerate(self.edges)}
        self.log = tuple(log)

    @classmethod
    def from_tables(cls, graph: ComputationGraph, tables: CostTables) -> "ReducedGraph":
        order = graph.topological_order()
        nodes = {lid: np.ascontiguousarray(tables.node_cost[lid], dtype=float) for lid in order}
        edges = {e.id: (e.src, e.dst) for e in graph.edges}
        xfer = {e.id: np.ascontiguousarray(tables.xfer[e.id], dtype=float) for e in graph.edges}
        return cls(nodes, edges, xfer, rank={lid: i for i, lid in enumerate(order)})

    def _derive(self, drop_nodes=(), drop_edges=(), new_edge=None, record=None) -> "ReducedGraph":
        nodes = {n: c for n, c in self.node_cost.items() if n not in drop_nodes}
        edges = {e: sd for e, sd in self.edges.items() if e not in drop_edges}
        xfer = {e: t for e, t in self.xfer.items() if e not in drop_edges}
        seq = {e: s for e, s in self.seq.items() if e not in drop_edges}
        if new_edge is not None:
            eid, src, dst, table = new_edge
            edges[eid] = (src, dst)
            xfer[eid] = table
            seq[eid] = max(self.seq.values(), default=-1) + 1
        return ReducedGraph(nodes, edges, xfer, self.rank, seq, self.log + (record,))

    # -- views ---------------------------------------------------------------

    @property
    def nodes(self) -> list[str]:
        """Live nodes in rank order."""
        return sorted(self.node_cost, key=lambda n: (self.rank[n], n))

    def __len__(self) -> int:
        return len(self.node_cost)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def config_counts(self) -> dict[str, int]:
        return {n: len(c) for n, c in self.node_cost.items()}

    def evaluate(self, indices: Mapping[str, int]) -> float:
        """Cost of an assignment on this (possibly reduced) graph."""
        total = 0.0
        for n in self.nodes:
            total += float(self.node_cost[n][indices[n]])
        for eid, (s, d) in self.edges.items():
            total += float(self.xfer[eid][indices[s], indices[d]])
        return total

    def _new_edge_id(self, tag: str) -> str:
        return f"~{tag}{len(self.log)}"


# ---------------------------------------------------------------------------
# Rewrites


def _degrees(rg: ReducedGraph) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
    ins: dict[str, list[str]] = {n: [] for n in rg.node_cost}
    outs: dict[str, list[str]] = {n: [] for n in rg.node_cost}
    for eid, (s, d) in rg.edges.items():
        outs[s].append(eid)
        ins[d].append(eid)
    return ins, outs


def node_elimination(rg: ReducedGraph, backend=None) -> tuple[ReducedGraph, bool]:
    """Fold away the lowest-ranked node with one in-edge and one out-edge, if any."""
    ins, outs = _degrees(rg)
    eligible = [n for n in rg.node_cost if len(ins[n]) == 1 and len(outs[n]) == 1]
    if not eligible:
        return rg, False
    w = min(eligible, key=lambda n: (rg.rank[n], n))
    e1, e2 = ins[w][0], outs[w][0]
    u, v = rg.edges[e1][0], rg.edges[e2][1]
    fn = (backend or kernels.backend).min_plus
    table, arg = fn(rg.xfer[e1], rg.node_cost[w], rg.xfer[e2])
    eid = rg._new_edge_id("n")
    record = NodeElim(w, u, v, e1, e2, eid, arg)
    return rg._derive(drop_nodes={w}, drop_edges={e1, e2}, new_edge=(eid, u, v, table), record=record), True


def edge_elimination(rg: ReducedGraph) -> tuple[ReducedGraph, bool]:
    """Merge the first pair of parallel edges, if any, by adding their tables."""
    groups: dict[tuple[str, str], list[str]] = {}
    for eid, sd in rg.edges.items():
        groups.setdefault(sd, []).append(eid)
    candidates = []
    for (s, d), eids in groups.items():
        if len(eids) >= 2:
            a, b = sorted(eids, key=rg.seq.__getitem__)[:2]
            candidates.append(((rg.rank[s], rg.rank[d], rg.seq[a], rg.seq[b]), s, d, a, b))
    if not candidates:
        return rg, False
    _, s, d, a, b = min(candidates)
    eid = rg._new_edge_id("e")
    table = rg.xfer[a] + rg.xfer[b]
    return rg._derive(drop_edges={a, b}, new_edge=(eid, s, d, table), record=EdgeElim(a, b, eid)), True


def reduce(rg: ReducedGraph, backend=None) -> ReducedGraph:
    """Alternate node and edge eliminations until neither applies."""
    while True:
        rg, changed_node = node_elimination(rg, backend)
        rg, changed_edge = edge_elimination(rg)
        if not (changed_node or changed_edge):
            return rg


def enumerate_final(rg: ReducedGraph, k_bound: int = DEFAULT_K_BOUND) -> tuple[dict[str, int], float]:
    """Exhaustively solve the reduced graph; ties go to the smallest index tuple."""
    nodes = rg.nodes
    if len(nodes) > k_bound:
        raise ReductionLimitError(len(nodes), k_bound)
    if not nodes:
        return {}, 0.0
    counts = [len(rg.node_cost[n]) for n in nodes]
    space = math.prod(counts)
    if space > FINAL_SPACE_LIMIT:
        raise BudgetExceededError(space, FINAL_SPACE_LIMIT)
    axis = {n: i for i, n in enumerate(nodes)}
    total = np.zeros(counts)
    for n in nodes:
        shape = [1] * len(nodes)
        shape[axis[n]] = counts[axis[n]]
        total = total + rg.node_cost[n].reshape(shape)
    for eid, (s, d) in rg.edges.items():
        table = rg.xfer[eid]
        if axis[s] > axis[d]:
            table = table.T
        shape = [1] * len(nodes)
        shape[axis[s]] = counts[axis[s]]
        shape[axis[d]] = counts[axis[d]]
        total = total + table.reshape(shape)
    flat = int(np.argmin(total))
    best = np.unravel_index(flat, total.shape)
    return {n: int(i) for n, i in zip(nodes, best)}, float(total.flat[flat])


def unwind(log, partial: Mapping[str, int]) -> dict[str, int]:
    """Recover configs for eliminated nodes by replaying the log backwards."""
    indices = dict(partial)
    for record in reversed(log):
        if isinstance(record, NodeElim):
            indices[record.removed] = int(record.argmin[indices[record.src], indices[record.dst]])
    return indices


# ---------------------------------------------------------------------------
# Driver


@dataclass
class PlanResult:
    strategy: Strategy
    cost: float
    indices: dict[str, int]
    eliminations: int
    node_eliminations: int
    edge_eliminations: int
    final_graph_nodes: int
    search_seconds: float
    tables: CostTables | None = field(default=None, repr=False)
    table_seconds: float = 0.0

    def __iter__(self):
        # allows `strategy, cost = plan(...)`
        return iter((self.strategy, self.cost))


def plan_tables(
    graph: ComputationGraph,
    tables: CostTables,
    k_bound: int = DEFAULT_K_BOUND,
    backend=None,
) -> PlanResult:
    """Optimal strategy under precomputed ``tables``."""
    start = time.perf_counter()
    final = reduce(ReducedGraph.from_tables(graph, tables), backend)
    partial, _ = enumerate_final(final, k_bound)
    indices = unwind(final.log, partial)
    elapsed = time.perf_counter() - start
    strategy = {lid: tables.configs[lid][indices[lid]] for lid in graph.layer_ids}
    n_node = sum(isinstance(r, NodeElim) for r in final.log)
    return PlanResult(
        strategy=strategy,
        cost=evaluate_strategy(graph, tables, strategy),
        indices={lid: indices[lid] for lid in graph.layer_ids},
        eliminations=len(final.log),
        node_eliminations=n_node,
        edge_eliminations=len(final.log) - n_node,
        final_graph_nodes=len(final),
        search_seconds=elapsed,
        tables=tables,
    )


def plan(
    graph: ComputationGraph,
    devices: DeviceGraph,
    k_bound: int = DEFAULT_K_BOUND,
    backend=None,
) -> PlanResult:
    start = time.perf_counter()
    tables = build_cost_tables(graph, devices, backend)
    table_seconds = time.perf_counter() - start
    result = plan_tables(graph, tables, k_bound, backend)
    result.table_seconds = table_seconds
    return result
