"""Fixed whole-network strategies used as comparison points."""

from __future__ import annotations

from .config import Config
from .cost import Strategy
from .graph import ComputationGraph, Conv2D, DeviceGraph, FullyConnected, Softmax

BASELINES = ("data", "model", "owt")


def _largest_divisor(n: int, bound: int) -> int:
    return max(d for d in range(1, min(n, bound) + 1) if n % d == 0)


def _sample_parallel(graph: ComputationGraph, lid: str, d: int) -> Config:
    return Config.of(sample=_largest_divisor(graph.shape(lid).sample, d))


def _channel_parallel(graph: ComputationGraph, lid: str, d: int) -> Config:
    return Config.of(channel=_largest_divisor(graph.shape(lid).channel, d))


def baseline_strategy(kind: str, graph: ComputationGraph, devices: DeviceGraph | int) -> Strategy:
    """Data, model or OWT parallelism over all devices.

    When the device count does not divide an extent, the largest divisor not
    exceeding it is used instead.
    """
    d = devices if isinstance(devices, int) else len(devices)
    out: Strategy = {}
    for layer in graph:
        k = layer.kind
        if kind == "data":
            channel = False
        elif kind == "model":
            channel = isinstance(k, (Conv2D, FullyConnected))
        elif kind == "owt":
            channel = isinstance(k, (FullyConnected, Softmax))
        else:
            raise ValueError(f"unknown baseline {kind!r}; choose from {BASELINES}")
        out[layer.id] = (_channel_parallel if channel else _sample_parallel)(graph, layer.id, d)
    return out
