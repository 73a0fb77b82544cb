"""Exhaustive baseline search and random test instances.

The brute-force search scores every joint assignment, so it is exponential in
the number of layers.  It exists to check the elimination planner, not to
compete with it.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import Config
from .cost import CostTables, Strategy, evaluate_strategy
from .elimination import ReducedGraph
from .errors import BudgetExceededError
from .graph import ComputationGraph, Concat, Input, Layer, Softmax, infer_shapes

DEFAULT_BUDGET = 10**7


@dataclass
class BruteResult:
    strategy: Strategy | None
    indices: dict[str, int]
    cost: float
    visited: int
    search_seconds: float

    def __iter__(self):
        return iter((self.strategy, self.cost))


def strategy_space(rg: ReducedGraph) -> int:
    return math.prod(len(c) for c in rg.node_cost.values())


def brute_force(rg: ReducedGraph, budget: int = DEFAULT_BUDGET, backend=None) -> BruteResult:
    """Minimum-cost assignment of ``rg`` by full enumeration in rank order."""
    space = strategy_space(rg)
    if space > budget:
        raise BudgetExceededError(space, budget)
    nodes = rg.nodes
    pos = {n: i for i, n in enumerate(nodes)}
    attached: list[list] = [[] for _ in nodes]
    for eid, (s, d) in rg.edges.items():
        later, other = max(pos[s], pos[d]), min(pos[s], pos[d])
        attached[later].append((other, later == pos[d], np.ascontiguousarray(rg.xfer[eid], dtype=float)))
    costs = [np.ascontiguousarray(rg.node_cost[n], dtype=float) for n in nodes]
    start = time.perf_counter()
    best, _, visited = (backend or kernels.backend).brute_force(costs, attached)
    elapsed = time.perf_counter() - start
    indices = {n: int(best[pos[n]]) for n in nodes}
    return BruteResult(None, indices, rg.evaluate(indices), int(visited), elapsed)


def brute_force_plan(
    graph: ComputationGraph,
    tables: CostTables,
    budget: int = DEFAULT_BUDGET,
    backend=None,
) -> BruteResult:
    result = brute_force(ReducedGraph.from_tables(graph, tables), budget, backend)
    strategy = tables.strategy_from_indices(result.indices)
    result.indices = {lid: result.indices[lid] for lid in graph.layer_ids}
    result.strategy = {lid: strategy[lid] for lid in graph.layer_ids}
    result.cost = evaluate_strategy(graph, tables, result.strategy)
    return result


# ---------------------------------------------------------------------------
# Random series-parallel instances


@dataclass(frozen=True)
class RandomGraphSpec:
    seed: int
    node_count: int = 6
    max_configs_per_layer: int = 3
    branch_probability: float = 0.4
    device_count: int = 4
    # probability that a parallel step adds a bare duplicate edge as well
    duplicate_probability: float = 0.3

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if self.max_configs_per_layer < 1:
            raise ValueError("max_configs_per_layer must be >= 1")
        if not 0.0 <= self.branch_probability <= 1.0:
            raise ValueError("branch_probability must be in [0, 1]")


# Values are multiples of 1/64 in [0, 10]: every partial sum of a few hundred
# such terms is exact in float64, so orderings cannot disagree by round-off.
COST_QUANTUM = 64
COST_MAX = 10


def _dyadic(rng: random.Random, shape) -> np.ndarray:
    size = math.prod(shape)
    return np.array([rng.randint(0, COST_MAX * COST_QUANTUM) for _ in range(size)], dtype=float).reshape(
        shape
    ) / COST_QUANTUM


def random_series_parallel_graph(spec: RandomGraphSpec) -> tuple[ComputationGraph, CostTables]:
    """Seeded two-terminal series-parallel DAG with synthetic cost tables.

    Grown from one source->sink edge by series steps (split an edge with a new
    node) and parallel steps (add a new branch beside an edge, sometimes also a
    duplicate edge).  The tables bypass the analytic model.
    """
    rng = random.Random(spec.seed)
    if spec.node_count == 1:
        names = ["n0"]
        edges: list[tuple[str, str]] = []
    else:
        names = ["n0", "n1"]
        edges = [("n0", "n1")]
        while len(names) < spec.node_count:
            u, v = edges[rng.randrange(len(edges))]
            w = f"n{len(names)}"
            names.append(w)
            if rng.random() < spec.branch_probability:
                edges += [(u, w), (w, v)]
                if rng.random() < spec.duplicate_probability:
                    edges.append((u, v))
            else:
                edges.remove((u, v))
                edges += [(u, w), (w, v)]

    inputs: dict[str, list[str]] = {n: [] for n in names}
    for u, v in edges:
        inputs[v].append(u)
    order = _topo(names, edges)
    layers = []
    for n in order:
        if not inputs[n]:
            kind = Input(1)
        elif len(inputs[n]) == 1:
            kind = Softmax()
        else:
            kind = Concat("channel")
        layers.append(Layer(n, kind, tuple(inputs[n])))
    graph = infer_shapes(ComputationGraph(layers, batch=1))

    counts = {n: rng.randint(1, spec.max_configs_per_layer) for n in order}
    configs = {n: [Config.of(sample=k + 1) for k in range(counts[n])] for n in order}
    node_cost = {n: _dyadic(rng, (counts[n],)) for n in order}
    xfer = {e.id: _dyadic(rng, (counts[e.src], counts[e.dst])) for e in graph.edges}
    zeros = {n: np.zeros(counts[n]) for n in order}
    return graph, CostTables(configs, node_cost, zeros, xfer)


def _topo(names: list[str], edges: list[tuple[str, str]]) -> list[str]:
    indeg = {n: 0 for n in names}
    for _, v in edges:
        indeg[v] += 1
    ready = [n for n in names if indeg[n] == 0]
    out = []
    while ready:
        n = ready.pop(0)
        out.append(n)
        for u, v in edges:
            if u == n:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
    return out
