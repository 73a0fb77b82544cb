"""Analytic cost model and precomputed cost tables.

Per-step time of a strategy is the sum of per-layer compute and parameter
synchronization time plus per-edge tensor transfer time.  All three are
tabulated up front over each layer's config catalog; the search only ever
reads the tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import kernels
from .config import Config, enumerate_configs, owned_boxes, place, required_boxes
from .errors import ConfigError, GraphError, StrategyError
from .graph import (
    DIMS,
    ComputationGraph,
    Concat,
    Conv2D,
    DeviceGraph,
    Edge,
    FullyConnected,
    Layer,
    Pool2D,
    Softmax,
    TensorShape,
)

BYTES_PER_ELEMENT = 4
# forward + backward, with backward counted as twice the forward work
PASSES = 3

Strategy = dict  # layer id -> Config


def layer_flops(layer: Layer, in_shape: TensorShape | None, out_shape: TensorShape) -> float:
    """Forward-pass floating point operations of one layer."""
    kind = layer.kind
    n = out_shape.sample
    if isinstance(kind, Conv2D):
        kh, kw = kind.kernel
        return 2.0 * n * out_shape.channel * out_shape.height * out_shape.width * in_shape.channel * kh * kw
    if isinstance(kind, FullyConnected):
        in_features = in_shape.channel * in_shape.height * in_shape.width
        return 2.0 * n * in_features * out_shape.channel
    if isinstance(kind, Pool2D):
        kh, kw = kind.kernel
        return float(n * out_shape.channel * out_shape.height * out_shape.width * kh * kw)
    if isinstance(kind, Softmax):
        return 5.0 * out_shape.volume
    return 0.0


def parameter_count(layer: Layer, in_shape: TensorShape | None, out_shape: TensorShape) -> int:
    kind = layer.kind
    if isinstance(kind, Conv2D):
        return kind.out_channels * in_shape.channel * kind.kernel[0] * kind.kernel[1]
    if isinstance(kind, FullyConnected):
        return in_shape.channel * in_shape.height * in_shape.width * kind.out_channels
    return 0


def compute_cost(
    layer: Layer,
    in_shape: TensorShape | None,
    out_shape: TensorShape,
    config: Config,
    devices: DeviceGraph,
) -> float:
    flops = layer_flops(layer, in_shape, out_shape)
    if flops == 0.0:
        return 0.0
    rate = min(devices.compute_rate(d) for d in place(config, devices))
    return flops / config.total_degree * PASSES / rate


def sync_bytes(layer: Layer, in_shape: TensorShape | None, out_shape: TensorShape, config: Config) -> list[float]:
    """Bytes each placed device exchanges with the parameter server (device 0)."""
    params = BYTES_PER_ELEMENT * parameter_count(layer, in_shape, out_shape)
    replicas = config.total_degree // config.channel
    devs = place(config, config.total_degree)
    if params == 0 or replicas == 1:
        return [0.0] * len(devs)
    shard = params / config.channel
    # gradients up, fresh parameters back
    return [0.0 if d == 0 else 2.0 * shard for d in devs]


def sync_cost(
    layer: Layer,
    in_shape: TensorShape | None,
    out_shape: TensorShape,
    config: Config,
    devices: DeviceGraph,
) -> float:
    per_device = sync_bytes(layer, in_shape, out_shape, config)
    total = 0.0
    for d, nbytes in zip(place(config, devices), per_device):
        if nbytes:
            total += nbytes / devices.bandwidth(d, 0)
    return total


def concat_offset(graph: ComputationGraph, edge: Edge) -> int:
    """Start of ``edge``'s tensor along the destination concat axis (0 otherwise)."""
    kind = graph[edge.dst].kind
    if not isinstance(kind, Concat):
        return 0
    axis = DIMS.index(kind.axis)
    siblings = sorted(graph.in_edges(edge.dst), key=lambda e: e.slot)
    return sum(graph.shape(e.src)[axis] for e in siblings if e.slot < edge.slot)


def _first_input_shape(graph: ComputationGraph, layer_id: str) -> TensorShape | None:
    ins = sorted(graph.in_edges(layer_id), key=lambda e: e.slot)
    return graph.shape(ins[0].src) if ins else None


def _stack(boxes: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(boxes) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(b) for b in boxes])
    return np.ascontiguousarray(np.concatenate(boxes), dtype=np.int64), offsets


def _edge_transfer_table(
    graph: ComputationGraph,
    edge: Edge,
    src_configs: list[Config],
    dst_configs: list[Config],
    bandwidth: np.ndarray,
    backend=None,
) -> np.ndarray:
    src_shape = graph.shape(edge.src)
    dst_shape = graph.shape(edge.dst)
    dst_layer = graph[edge.dst]
    offset = concat_offset(graph, edge)
    src_boxes, src_off = _stack([owned_boxes(src_shape, c) for c in src_configs])
    dst_boxes, dst_off = _stack(
        [required_boxes(dst_layer, owned_boxes(dst_shape, c), src_shape, offset) for c in dst_configs]
    )
    fn = (backend or kernels.backend).transfer_table
    return fn(src_boxes, src_off, dst_boxes, dst_off, bandwidth)


def transfer_cost(
    graph: ComputationGraph,
    edge: Edge | str,
    c_src: Config,
    c_dst: Config,
    devices: DeviceGraph,
) -> float:
    """Time to move ``edge``'s tensor from its producer's layout to what the consumer reads."""
    if isinstance(edge, str):
        edge = graph.edge(edge)
    place(c_src, devices)
    place(c_dst, devices)
    bw = np.ascontiguousarray(devices.bandwidths)
    return float(_edge_transfer_table(graph, edge, [c_src], [c_dst], bw)[0, 0])


def transfer_bytes(graph: ComputationGraph, edge: Edge, c_src: Config, c_dst: Config) -> int:
    """Total bytes crossing device boundaries for one edge."""
    src_shape = graph.shape(edge.src)
    dst_shape = graph.shape(edge.dst)
    own = owned_boxes(src_shape, c_src)
    req = required_boxes(graph[edge.dst], owned_boxes(dst_shape, c_dst), src_shape, concat_offset(graph, edge))
    lo = np.maximum(own[:, None, :, 0], req[None, :, :, 0])
    hi = np.minimum(own[:, None, :, 1], req[None, :, :, 1])
    vol = np.prod(np.maximum(hi - lo, 0), axis=2)
    # identity placement: box index is device id
    cross = np.arange(len(own))[:, None] != np.arange(len(req))[None, :]
    return int(BYTES_PER_ELEMENT * vol[cross].sum())


# ---------------------------------------------------------------------------
# Tables


@dataclass
class CostTables:
    """Cost vectors per layer and transfer matrices per edge, over fixed config catalogs."""

    configs: dict[str, list[Config]]
    compute: dict[str, np.ndarray]
    sync: dict[str, np.ndarray]
    xfer: dict[str, np.ndarray]
    node_cost: dict[str, np.ndarray] = field(init=False)

    def __post_init__(self):
        self.node_cost = {lid: self.compute[lid] + self.sync[lid] for lid in self.configs}
        self._index = {lid: {c: i for i, c in enumerate(cs)} for lid, cs in self.configs.items()}

    def config_index(self, layer_id: str, config: Config) -> int:
        try:
            return self._index[layer_id][config]
        except KeyError:
            if layer_id not in self._index:
                raise StrategyError(f"unknown layer {layer_id!r}") from None
            raise StrategyError(f"config {config} is not valid for layer {layer_id!r}") from None

    def indices(self, graph: ComputationGraph, strategy: Mapping[str, Config]) -> dict[str, int]:
        missing = [lid for lid in graph.layer_ids if lid not in strategy]
        if missing:
            raise StrategyError(f"strategy is missing layer(s) {missing}")
        extra = sorted(set(strategy) - set(graph.layer_ids))
        if extra:
            raise StrategyError(f"strategy names unknown layer(s) {extra}")
        return {lid: self.config_index(lid, strategy[lid]) for lid in graph.layer_ids}

    def strategy_from_indices(self, indices: Mapping[str, int]) -> Strategy:
        return {lid: self.configs[lid][i] for lid, i in indices.items()}


def build_cost_tables(graph: ComputationGraph, devices: DeviceGraph, backend=None) -> CostTables:
    n_dev = len(devices)
    configs: dict[str, list[Config]] = {}
    compute: dict[str, np.ndarray] = {}
    sync: dict[str, np.ndarray] = {}
    for layer in graph:
        out_shape = graph.shape(layer.id)
        in_shape = _first_input_shape(graph, layer.id)
        cs = enumerate_configs(layer, out_shape, n_dev)
        configs[layer.id] = cs
        compute[layer.id] = np.array([compute_cost(layer, in_shape, out_shape, c, devices) for c in cs])
        sync[layer.id] = np.array([sync_cost(layer, in_shape, out_shape, c, devices) for c in cs])
    bw = np.ascontiguousarray(devices.bandwidths)
    xfer = {
        e.id: _edge_transfer_table(graph, e, configs[e.src], configs[e.dst], bw, backend) for e in graph.edges
    }
    return CostTables(configs, compute, sync, xfer)


def evaluate_strategy(graph: ComputationGraph, tables: CostTables, strategy: Mapping[str, Config]) -> float:
    """Per-step time of ``strategy``: every node cost, then every edge cost, in graph order."""
    idx = tables.indices(graph, strategy)
    total = 0.0
    for lid in graph.layer_ids:
        total += float(tables.node_cost[lid][idx[lid]])
    for e in graph.edges:
        total += float(tables.xfer[e.id][idx[e.src], idx[e.dst]])
    return total


def evaluate_indices(graph: ComputationGraph, tables: CostTables, indices: Mapping[str, int]) -> float:
    return evaluate_strategy(graph, tables, tables.strategy_from_indices(indices))


# ---------------------------------------------------------------------------
# Measured-cost override


def load_measured_costs(graph: ComputationGraph, tables: CostTables, text: str) -> CostTables:
    """Replace analytic entries with measured ones from a JSON document.

    Measured node costs are booked as compute time with zero sync time.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"measured cost file is not valid JSON: {exc}") from None
    compute = dict(tables.compute)
    sync = dict(tables.sync)
    xfer = dict(tables.xfer)
    for lid, values in doc.get("node_costs", {}).items():
        if lid not in tables.configs:
            raise GraphError(f"measured costs name unknown layer {lid!r}")
        arr = np.asarray(values, dtype=float)
        if arr.shape != (len(tables.configs[lid]),):
            raise ConfigError(f"layer {lid!r}: expected {len(tables.configs[lid])} node costs, got {arr.shape}")
        _check_nonneg(arr, f"layer {lid!r}")
        compute[lid] = arr
        sync[lid] = np.zeros_like(arr)
    for eid, values in doc.get("xfer_costs", {}).items():
        try:
            e = graph.edge(eid)
        except KeyError:
            raise GraphError(f"measured costs name unknown edge {eid!r}") from None
        arr = np.asarray(values, dtype=float)
        want = (len(tables.configs[e.src]), len(tables.configs[e.dst]))
        if arr.shape != want:
            raise ConfigError(f"edge {eid!r}: expected a {want[0]}x{want[1]} transfer table, got {arr.shape}")
        _check_nonneg(arr, f"edge {eid!r}")
        xfer[eid] = arr
    return CostTables(dict(tables.configs), compute, sync, xfer)


def _check_nonneg(arr: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ConfigError(f"{where}: costs must be finite and non-negative")
