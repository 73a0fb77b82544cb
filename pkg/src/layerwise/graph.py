"""Computation graph and device graph data model.

A computation graph is a DAG (multigraph) whose nodes are layers and whose
edges are the tensors flowing between them.  Edges carry explicit ids because
graph reductions create parallel edges between the same pair of layers.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence, Union

import numpy as np

from .errors import GraphError, ShapeError

DIMS = ("sample", "channel", "height", "width")
SAMPLE, CHANNEL, HEIGHT, WIDTH = range(4)


class TensorShape(NamedTuple):
    sample: int
    channel: int
    height: int = 1
    width: int = 1

    @property
    def volume(self) -> int:
        return self.sample * self.channel * self.height * self.width


def _pair(value, name: str) -> tuple[int, int]:
    if isinstance(value, int):
        return (value, value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, int) for v in value):
        return (value[0], value[1])
    raise GraphError(f"{name} must be an int or a pair of ints, got {value!r}")


# ---------------------------------------------------------------------------
# Layer kinds


@dataclass(frozen=True)
class Input:
    channel: int
    height: int = 1
    width: int = 1

    def __post_init__(self):
        if min(self.channel, self.height, self.width) < 1:
            raise GraphError(f"input extents must be >= 1, got {self}")


@dataclass(frozen=True)
class Conv2D:
    out_channels: int
    kernel: tuple[int, int] = (1, 1)
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        _check_window(self, "conv2d")
        if self.out_channels < 1:
            raise GraphError(f"conv2d out_channels must be >= 1, got {self.out_channels}")


@dataclass(frozen=True)
class Pool2D:
    kernel: tuple[int, int] = (2, 2)
    stride: tuple[int, int] = (2, 2)
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        _check_window(self, "pool2d")


@dataclass(frozen=True)
class FullyConnected:
    out_channels: int

    def __post_init__(self):
        if self.out_channels < 1:
            raise GraphError(f"fc out_channels must be >= 1, got {self.out_channels}")


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Concat:
    axis: str = "channel"

    def __post_init__(self):
        if self.axis not in DIMS:
            raise GraphError(f"concat axis must be one of {DIMS}, got {self.axis!r}")


@dataclass(frozen=True)
class Softmax:
    pass


LayerKind = Union[Input, Conv2D, Pool2D, FullyConnected, Flatten, Concat, Softmax]
WindowKind = (Conv2D, Pool2D)


def _check_window(kind, name: str) -> None:
    for attr in ("kernel", "stride", "padding"):
        value = getattr(kind, attr)
        if not (isinstance(value, tuple) and len(value) == 2):
            raise GraphError(f"{name} {attr} must be a pair, got {value!r}")
    if min(kind.kernel) < 1 or min(kind.stride) < 1:
        raise GraphError(f"{name} kernel and stride must be >= 1")
    if min(kind.padding) < 0:
        raise GraphError(f"{name} padding must be >= 0")


KIND_NAMES = {
    Input: "input",
    Conv2D: "conv2d",
    Pool2D: "pool2d",
    FullyConnected: "fc",
    Flatten: "flatten",
    Concat: "concat",
    Softmax: "softmax",
}


@dataclass(frozen=True)
class Layer:
    id: str
    kind: LayerKind
    inputs: tuple[str, ...] = ()

    @property
    def kind_name(self) -> str:
        return KIND_NAMES[type(self.kind)]


@dataclass(frozen=True)
class Edge:
    id: str
    src: str
    dst: str
    slot: int  # position of this tensor in dst's input list


# ---------------------------------------------------------------------------
# Computation graph


class ComputationGraph:
    """Validated layer DAG.  Use :func:`infer_shapes` to attach output shapes."""

    def __init__(self, layers: Sequence[Layer], batch: int, shapes: dict[str, TensorShape] | None = None):
        if not isinstance(batch, int) or batch < 1:
            raise GraphError(f"batch must be a positive integer, got {batch!r}")
        self.batch = batch
        self._layers: dict[str, Layer] = {}
        for layer in layers:
            if layer.id in self._layers:
                raise GraphError(f"duplicate layer id {layer.id!r}")
            self._layers[layer.id] = layer

        edges: list[Edge] = []
        for layer in self._layers.values():
            pair_counts = Counter(layer.inputs)
            for slot, src in enumerate(layer.inputs):
                if src not in self._layers:
                    raise GraphError(f"layer {layer.id!r} references undeclared layer {src!r}")
                eid = f"{src}->{layer.id}"
                if pair_counts[src] > 1:
                    eid += f"#{slot}"
                edges.append(Edge(eid, src, layer.id, slot))
        self._edges = tuple(edges)
        self._edge_index = {e.id: e for e in self._edges}
        self._in: dict[str, list[Edge]] = {lid: [] for lid in self._layers}
        self._out: dict[str, list[Edge]] = {lid: [] for lid in self._layers}
        for e in self._edges:
            self._in[e.dst].append(e)
            self._out[e.src].append(e)

        self._check_arity()
        self._topo = self._toposort()
        self._check_reachability()
        self.shapes: dict[str, TensorShape] = dict(shapes) if shapes else {}

    def _check_arity(self) -> None:
        for layer in self._layers.values():
            n_in = len(layer.inputs)
            if isinstance(layer.kind, Input):
                if n_in:
                    raise GraphError(f"input layer {layer.id!r} must not have inputs")
            elif isinstance(layer.kind, Concat):
                if n_in < 2:
                    raise GraphError(f"concat layer {layer.id!r} needs at least 2 inputs, got {n_in}")
            elif n_in != 1:
                raise GraphError(f"{layer.kind_name} layer {layer.id!r} needs exactly 1 input, got {n_in}")

    def _toposort(self) -> tuple[str, ...]:
        indeg = {lid: len(self._in[lid]) for lid in self._layers}
        order: list[str] = []
        ready = [lid for lid in self._layers if indeg[lid] == 0]
        position = {lid: i for i, lid in enumerate(self._layers)}
        while ready:
            ready.sort(key=position.__getitem__)
            lid = ready.pop(0)
            order.append(lid)
            for e in self._out[lid]:
                indeg[e.dst] -= 1
                if indeg[e.dst] == 0:
                    ready.append(e.dst)
        if len(order) != len(self._layers):
            stuck = sorted(lid for lid in self._layers if indeg[lid] > 0)
            raise GraphError(f"computation graph has a cycle through layers {stuck}")
        return tuple(order)

    def _check_reachability(self) -> None:
        seen: set[str] = set()
        stack = [lid for lid, layer in self._layers.items() if isinstance(layer.kind, Input)]
        while stack:
            lid = stack.pop()
            if lid in seen:
                continue
            seen.add(lid)
            stack.extend(e.dst for e in self._out[lid])
        unreachable = [lid for lid in self._layers if lid not in seen]
        if unreachable:
            raise GraphError(f"layers not reachable from any input: {unreachable}")

    # -- accessors ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._layers)

    def __iter__(self) -> Iterator[Layer]:
        return iter(self._layers.values())

    def __contains__(self, layer_id: str) -> bool:
        return layer_id in self._layers

    def __getitem__(self, layer_id: str) -> Layer:
        return self._layers[layer_id]

    @property
    def node_count(self) -> int:
        return len(self._layers)

    @property
    def layer_count(self) -> int:
        """Number of non-input layers; matches how published layer counts are tallied."""
        return sum(1 for layer in self._layers.values() if not isinstance(layer.kind, Input))

    @property
    def layer_ids(self) -> tuple[str, ...]:
        return tuple(self._layers)

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    def edge(self, edge_id: str) -> Edge:
        return self._edge_index[edge_id]

    def in_edges(self, layer_id: str) -> list[Edge]:
        return list(self._in[layer_id])

    def out_edges(self, layer_id: str) -> list[Edge]:
        return list(self._out[layer_id])

    def topological_order(self) -> tuple[str, ...]:
        return self._topo

    def shape(self, layer_id: str) -> TensorShape:
        try:
            return self.shapes[layer_id]
        except KeyError:
            raise ShapeError(f"shape of layer {layer_id!r} not inferred") from None

    def input_shape(self, edge: Edge) -> TensorShape:
        return self.shape(edge.src)

    def with_shapes(self, shapes: dict[str, TensorShape]) -> "ComputationGraph":
        return ComputationGraph(list(self._layers.values()), self.batch, shapes)

    def relabel(self, mapping: dict[str, str]) -> "ComputationGraph":
        """Copy of the graph with layer ids renamed through ``mapping``."""
        layers = [
            Layer(mapping[l.id], l.kind, tuple(mapping[s] for s in l.inputs)) for l in self._layers.values()
        ]
        shapes = {mapping[k]: v for k, v in self.shapes.items()}
        return ComputationGraph(layers, self.batch, shapes)

    def __repr__(self) -> str:
        return f"ComputationGraph({len(self._layers)} layers, {len(self._edges)} edges, batch={self.batch})"


# ---------------------------------------------------------------------------
# Shape inference


def _window_extent(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def _infer_one(layer: Layer, batch: int, ins: list[TensorShape]) -> TensorShape:
    kind = layer.kind
    if isinstance(kind, Input):
        return TensorShape(batch, kind.channel, kind.height, kind.width)
    src = ins[0]
    if isinstance(kind, (Conv2D, Pool2D)):
        oh = _window_extent(src.height, kind.kernel[0], kind.stride[0], kind.padding[0])
        ow = _window_extent(src.width, kind.kernel[1], kind.stride[1], kind.padding[1])
        if oh < 1 or ow < 1:
            raise ShapeError(
                f"layer {layer.id!r}: window {kind.kernel} over input {src.height}x{src.width} "
                f"gives non-positive output {oh}x{ow}"
            )
        channels = kind.out_channels if isinstance(kind, Conv2D) else src.channel
        return TensorShape(src.sample, channels, oh, ow)
    if isinstance(kind, FullyConnected):
        return TensorShape(src.sample, kind.out_channels, 1, 1)
    if isinstance(kind, Flatten):
        return TensorShape(src.sample, src.channel * src.height * src.width, 1, 1)
    if isinstance(kind, Softmax):
        return src
    if isinstance(kind, Concat):
        axis = DIMS.index(kind.axis)
        out = list(ins[0])
        for other in ins[1:]:
            for d in range(4):
                if d != axis and other[d] != out[d]:
                    raise ShapeError(
                        f"concat {layer.id!r}: inputs disagree on {DIMS[d]} extent ({other[d]} vs {out[d]})"
                    )
            out[axis] += other[axis]
        return TensorShape(*out)
    raise GraphError(f"unsupported layer kind {kind!r}")


def infer_shapes(graph: ComputationGraph) -> ComputationGraph:
    """Return a copy of ``graph`` with every layer's output shape filled in."""
    shapes: dict[str, TensorShape] = {}
    for lid in graph.topological_order():
        layer = graph[lid]
        ins = [shapes[e.src] for e in sorted(graph.in_edges(lid), key=lambda e: e.slot)]
        shapes[lid] = _infer_one(layer, graph.batch, ins)
    return graph.with_shapes(shapes)


# ---------------------------------------------------------------------------
# Network JSON


def _kind_from_json(entry: dict, where: str) -> LayerKind:
    kind = entry.get("kind")
    try:
        if kind == "input":
            return Input(int(entry["channel"]), int(entry.get("height", 1)), int(entry.get("width", 1)))
        if kind == "conv2d":
            return Conv2D(
                int(entry["out_channels"]),
                _pair(entry.get("kernel", 1), f"{where} kernel"),
                _pair(entry.get("stride", 1), f"{where} stride"),
                _pair(entry.get("padding", 0), f"{where} padding"),
            )
        if kind == "pool2d":
            return Pool2D(
                _pair(entry.get("kernel", 2), f"{where} kernel"),
                _pair(entry.get("stride", entry.get("kernel", 2)), f"{where} stride"),
                _pair(entry.get("padding", 0), f"{where} padding"),
            )
        if kind in ("fc", "fully_connected"):
            return FullyConnected(int(entry["out_channels"]))
        if kind == "flatten":
            return Flatten()
        if kind == "concat":
            return Concat(entry.get("axis", "channel"))
        if kind == "softmax":
            return Softmax()
    except KeyError as exc:
        raise GraphError(f"{where}: missing field {exc.args[0]!r} for kind {kind!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GraphError):
            raise GraphError(f"{where}: {exc}") from None
        raise GraphError(f"{where}: bad field value ({exc})") from None
    raise GraphError(f"{where}: unknown layer kind {kind!r}")


def parse_network(text: str) -> ComputationGraph:
    """Parse a network JSON document into a shape-inferred graph."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"network file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise GraphError("network document must be a JSON object")
    batch = doc.get("batch")
    if not isinstance(batch, int) or isinstance(batch, bool):
        raise GraphError(f"'batch' must be an integer, got {batch!r}")
    entries = doc.get("layers")
    if not isinstance(entries, list) or not entries:
        raise GraphError("'layers' must be a non-empty list")
    layers = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise GraphError(f"layers[{i}] must be an object")
        lid = entry.get("id")
        if not isinstance(lid, str) or not lid:
            raise GraphError(f"layers[{i}]: 'id' must be a non-empty string")
        where = f"layer {lid!r}"
        inputs = entry.get("inputs", [])
        if not isinstance(inputs, list) or not all(isinstance(s, str) for s in inputs):
            raise GraphError(f"{where}: 'inputs' must be a list of layer ids")
        layers.append(Layer(lid, _kind_from_json(entry, where), tuple(inputs)))
    return infer_shapes(ComputationGraph(layers, batch))


def network_to_json(graph: ComputationGraph) -> dict:
    """Inverse of :func:`parse_network` (shapes are not serialized)."""
    out = []
    for layer in graph:
        entry: dict = {"id": layer.id, "kind": layer.kind_name, "inputs": list(layer.inputs)}
        kind = layer.kind
        if isinstance(kind, Input):
            entry.update(channel=kind.channel, height=kind.height, width=kind.width)
        elif isinstance(kind, Conv2D):
            entry.update(
                out_channels=kind.out_channels,
                kernel=list(kind.kernel),
                stride=list(kind.stride),
                padding=list(kind.padding),
            )
        elif isinstance(kind, Pool2D):
            entry.update(kernel=list(kind.kernel), stride=list(kind.stride), padding=list(kind.padding))
        elif isinstance(kind, FullyConnected):
            entry.update(out_channels=kind.out_channels)
        elif isinstance(kind, Concat):
            entry.update(axis=kind.axis)
        out.append(entry)
    return {"batch": graph.batch, "layers": out}


# ---------------------------------------------------------------------------
# Device graph


@dataclass(frozen=True)
class Device:
    id: int
    compute_rate: float  # flop/s


@dataclass
class DeviceGraph:
    """Devices plus a complete ordered-pair bandwidth table (bytes/s)."""

    devices: tuple[Device, ...]
    bandwidths: np.ndarray
    default_bandwidth: float = field(default=0.0)

    def __post_init__(self):
        ids = [d.id for d in self.devices]
        dup = [i for i, n in Counter(ids).items() if n > 1]
        if dup:
            raise GraphError(f"duplicate device id(s) {sorted(dup)}")
        if sorted(ids) != list(range(len(ids))):
            raise GraphError(f"device ids must be dense from 0, got {sorted(ids)}")
        self.devices = tuple(sorted(self.devices, key=lambda d: d.id))
        for d in self.devices:
            if not d.compute_rate > 0:
                raise GraphError(f"device {d.id} compute rate must be positive, got {d.compute_rate}")
        n = len(self.devices)
        bw = np.asarray(self.bandwidths, dtype=np.float64)
        if bw.shape != (n, n):
            raise GraphError(f"bandwidth table must be {n}x{n}, got {bw.shape}")
        off = ~np.eye(n, dtype=bool)
        if n > 1 and not np.all(bw[off] > 0):
            raise GraphError("all cross-device bandwidths must be positive")
        bw = bw.copy()
        np.fill_diagonal(bw, np.inf)
        bw.setflags(write=False)
        self.bandwidths = bw

    def __len__(self) -> int:
        return len(self.devices)

    def bandwidth(self, src: int, dst: int) -> float:
        return float(self.bandwidths[src, dst])

    def compute_rate(self, device: int) -> float:
        return self.devices[device].compute_rate

    @classmethod
    def uniform(cls, count: int, compute_rate: float = 1e13, bandwidth: float = 1e10) -> "DeviceGraph":
        devices = tuple(Device(i, compute_rate) for i in range(count))
        return cls(devices, np.full((count, count), float(bandwidth)), float(bandwidth))

    @classmethod
    def cluster(
        cls,
        count: int,
        per_node: int = 4,
        compute_rate: float = 1e13,
        intra_bandwidth: float = 2e10,
        inter_bandwidth: float = 1.25e10,
    ) -> "DeviceGraph":
        """GPUs grouped ``per_node`` to a machine; fast links inside a machine, slower between."""
        if count < 1:
            raise GraphError(f"device count must be >= 1, got {count}")
        node = np.arange(count) // per_node
        bw = np.where(node[:, None] == node[None, :], intra_bandwidth, inter_bandwidth).astype(float)
        devices = tuple(Device(i, compute_rate) for i in range(count))
        return cls(devices, bw, float(inter_bandwidth))


def parse_device_graph(text: str) -> DeviceGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"device file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("devices"), list) or not doc["devices"]:
        raise GraphError("device document must be an object with a non-empty 'devices' list")
    devices = []
    for i, entry in enumerate(doc["devices"]):
        try:
            devices.append(Device(int(entry["id"]), float(entry["flops"])))
        except (KeyError, TypeError, ValueError):
            raise GraphError(f"devices[{i}] must have integer 'id' and numeric 'flops'") from None
    ids = [d.id for d in devices]
    dup = sorted(i for i, n in Counter(ids).items() if n > 1)
    if dup:
        raise GraphError(f"duplicate device id(s) {dup}")
    n = len(devices)
    default = doc.get("default_bandwidth")
    links = doc.get("links", [])
    if default is None and n > 1 and len(links) < n * (n - 1):
        raise GraphError("'default_bandwidth' is required unless every ordered device pair is linked")
    if default is not None:
        try:
            default = float(default)
        except (TypeError, ValueError):
            raise GraphError(f"default_bandwidth must be numeric, got {default!r}") from None
        if not default > 0:
            raise GraphError(f"default_bandwidth must be positive, got {default}")
    else:
        default = 0.0
    bw = np.full((n, n), default)
    for i, link in enumerate(links):
        try:
            src, dst, value = int(link["src"]), int(link["dst"]), float(link["bandwidth"])
        except (KeyError, TypeError, ValueError):
            raise GraphError(f"links[{i}] must have integer 'src'/'dst' and numeric 'bandwidth'") from None
        if not value > 0:
            raise GraphError(f"links[{i}] bandwidth must be positive, got {value}")
        if not (0 <= src < n and 0 <= dst < n) or src == dst:
            raise GraphError(f"links[{i}] connects unknown or identical devices ({src}, {dst})")
        bw[src, dst] = value
    return DeviceGraph(tuple(devices), bw, default)

