"""Per-layer parallelization configs and the geometry of their partitions.

A config fixes a degree of parallelism for each of the four tensor dimensions
(sample, channel, height, width).  Partition ``i`` of a config owns one equal
block of the layer's output tensor, with ``i`` decoded row-major over the
degrees.  Boxes are stored as ``(4, 2)`` int arrays of half-open ``[lo, hi)``
intervals, one row per dimension.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PlacementError
from .graph import (
    DIMS,
    Concat,
    Conv2D,
    DeviceGraph,
    Flatten,
    FullyConnected,
    Input,
    Layer,
    LayerKind,
    Pool2D,
    Softmax,
    TensorShape,
)


@dataclass(frozen=True, order=True)
class Config:
    degrees: tuple[int, int, int, int] = (1, 1, 1, 1)

    def __post_init__(self):
        if len(self.degrees) != 4 or any(not isinstance(d, (int, np.integer)) or d < 1 for d in self.degrees):
            raise ConfigError(f"degrees must be four positive integers, got {self.degrees!r}")
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))

    @classmethod
    def of(cls, sample: int = 1, channel: int = 1, height: int = 1, width: int = 1) -> "Config":
        return cls((sample, channel, height, width))

    @property
    def total_degree(self) -> int:
        return math.prod(self.degrees)

    @property
    def sample(self) -> int:
        return self.degrees[0]

    @property
    def channel(self) -> int:
        return self.degrees[1]

    @property
    def height(self) -> int:
        return self.degrees[2]

    @property
    def width(self) -> int:
        return self.degrees[3]

    def to_json(self) -> dict[str, int]:
        return dict(zip(DIMS, self.degrees))

    @classmethod
    def from_json(cls, doc: dict) -> "Config":
        unknown = set(doc) - set(DIMS)
        if unknown:
            raise ConfigError(f"unknown config dimension(s) {sorted(unknown)}")
        try:
            return cls(tuple(int(doc.get(d, 1)) for d in DIMS))
        except (TypeError, ValueError):
            raise ConfigError(f"config degrees must be integers, got {doc!r}") from None

    def __str__(self) -> str:
        return "{" + ", ".join(f"{d[0]}={v}" for d, v in zip(DIMS, self.degrees)) + "}"


ALL_ONES = Config()


@dataclass(frozen=True)
class Region:
    """Axis-aligned box of half-open intervals over (sample, channel, height, width)."""

    bounds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.bounds) != 4 or any(lo > hi for lo, hi in self.bounds):
            raise ValueError(f"invalid region bounds {self.bounds!r}")

    @classmethod
    def from_box(cls, box: np.ndarray) -> "Region":
        return cls(tuple((int(lo), int(hi)) for lo, hi in box))

    @classmethod
    def full(cls, shape: TensorShape) -> "Region":
        return cls(tuple((0, n) for n in shape))

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(hi - lo for lo, hi in self.bounds)

    @property
    def volume(self) -> int:
        return math.prod(self.lengths)

    @property
    def is_empty(self) -> bool:
        return self.volume == 0

    def intersect(self, other: "Region") -> "Region":
        out = []
        for (a, b), (c, d) in zip(self.bounds, other.bounds):
            lo, hi = max(a, c), min(b, d)
            out.append((lo, max(lo, hi)))
        return Region(tuple(out))

    def __getitem__(self, dim: str) -> tuple[int, int]:
        return self.bounds[DIMS.index(dim)]


# ---------------------------------------------------------------------------
# Config enumeration


def _kind(layer_or_kind) -> LayerKind:
    return layer_or_kind.kind if isinstance(layer_or_kind, Layer) else layer_or_kind


def parallelizable_dims(kind, shape: TensorShape | None = None) -> tuple[str, ...]:
    """Dimensions a layer may be partitioned along, in canonical order."""
    kind = _kind(kind)
    if isinstance(kind, (FullyConnected, Softmax)):
        return ("sample", "channel")
    if isinstance(kind, (Conv2D, Pool2D)):
        return DIMS
    if shape is None:
        return DIMS
    return tuple(d for d, n in zip(DIMS, shape) if n > 1)


def _divisors_upto(n: int, bound: int) -> list[int]:
    return [d for d in range(1, min(n, bound) + 1) if n % d == 0]


def enumerate_configs(layer, shape: TensorShape, device_count: int) -> list[Config]:
    """All configs whose degrees divide ``shape`` and whose total degree fits the devices."""
    if device_count < 1:
        raise ConfigError(f"device count must be >= 1, got {device_count}")
    dims = set(parallelizable_dims(layer, shape))
    options = [_divisors_upto(n, device_count) if d in dims else [1] for d, n in zip(DIMS, shape)]
    return [Config(t) for t in itertools.product(*options) if math.prod(t) <= device_count]


def check_config(layer, shape: TensorShape, config: Config, device_count: int | None = None) -> None:
    dims = set(parallelizable_dims(layer, shape))
    for d, n, k in zip(DIMS, shape, config.degrees):
        if k > 1 and d not in dims:
            raise ConfigError(f"dimension {d!r} is not parallelizable for this layer (config {config})")
        if n % k:
            raise ConfigError(f"degree {k} does not divide {d} extent {n} (config {config})")
    if device_count is not None and config.total_degree > device_count:
        raise ConfigError(f"config {config} needs {config.total_degree} devices, only {device_count} available")


# ---------------------------------------------------------------------------
# Partition geometry


def owned_boxes(shape: TensorShape, config: Config) -> np.ndarray:
    """Owned output blocks for every partition, shape ``(total_degree, 4, 2)``."""
    degrees = config.degrees
    for d, n, k in zip(DIMS, shape, degrees):
        if n % k:
            raise ConfigError(f"degree {k} does not divide {d} extent {n}")
    idx = np.stack(np.unravel_index(np.arange(config.total_degree), degrees), axis=1)
    size = np.array([n // k for n, k in zip(shape, degrees)], dtype=np.int64)
    lo = idx * size
    return np.stack([lo, lo + size], axis=2).astype(np.int64)


def owned_region(shape: TensorShape, config: Config, part_index: int) -> Region:
    if not 0 <= part_index < config.total_degree:
        raise IndexError(f"partition index {part_index} out of range for total degree {config.total_degree}")
    return Region.from_box(owned_boxes(shape, config)[part_index])


def _window_span(lo, hi, kernel: int, stride: int, pad: int, extent: int):
    """Tightest input interval read by outputs ``[lo, hi)``.

    Only outputs whose window overlaps ``[0, extent)`` count, so windows that
    sit entirely in padding (or skip over rows when stride > kernel) do not
    widen the span.
    """
    first = np.maximum(lo, -((kernel - 1 - pad) // stride))  # ceil((pad - kernel + 1) / stride)
    last = np.minimum(hi - 1, (extent - 1 + pad) // stride)
    start = np.clip(first * stride - pad, 0, extent)
    stop = np.clip(last * stride - pad + kernel, 0, extent)
    empty = (first > last) | (stop <= start)
    return np.where(empty, 0, start), np.where(empty, 0, stop)


def required_boxes(
    kind,
    owned: np.ndarray,
    src_shape: TensorShape,
    offset: int = 0,
) -> np.ndarray:
    """Input blocks each partition must read, given its owned output blocks.

    ``offset`` is the position of this input along a concat's axis and is
    ignored for every other layer kind.
    """
    kind = _kind(kind)
    req = owned.copy()
    if isinstance(kind, (Conv2D, Pool2D)):
        for axis, d in ((2, 0), (3, 1)):
            req[:, axis, 0], req[:, axis, 1] = _window_span(
                owned[:, axis, 0], owned[:, axis, 1], kind.kernel[d], kind.stride[d], kind.padding[d], src_shape[axis]
            )
        if isinstance(kind, Conv2D):
            req[:, 1] = (0, src_shape.channel)
    elif isinstance(kind, FullyConnected):
        req[:, 1] = (0, src_shape.channel)
        req[:, 2] = (0, src_shape.height)
        req[:, 3] = (0, src_shape.width)
    elif isinstance(kind, Flatten):
        plane = src_shape.height * src_shape.width
        req[:, 1, 0] = owned[:, 1, 0] // plane
        req[:, 1, 1] = -(-owned[:, 1, 1] // plane)
        req[:, 2] = (0, src_shape.height)
        req[:, 3] = (0, src_shape.width)
    elif isinstance(kind, Concat):
        axis = DIMS.index(kind.axis)
        lo = np.maximum(owned[:, axis, 0], offset) - offset
        hi = np.minimum(owned[:, axis, 1], offset + src_shape[axis]) - offset
        req[:, axis, 0] = np.clip(lo, 0, src_shape[axis])
        req[:, axis, 1] = np.maximum(req[:, axis, 0], np.clip(hi, 0, src_shape[axis]))
    elif isinstance(kind, Softmax):
        pass
    elif isinstance(kind, Input):
        raise ConfigError("input layers have no inputs")
    else:
        raise ConfigError(f"unsupported layer kind {kind!r}")
    return req


def required_input_region(
    dst_layer,
    dst_config: Config,
    part_index: int,
    src_shape: TensorShape,
    dst_shape: TensorShape,
    offset: int = 0,
) -> Region:
    """Region of the source tensor partition ``part_index`` of ``dst_layer`` reads."""
    if not 0 <= part_index < dst_config.total_degree:
        raise IndexError(f"partition index {part_index} out of range for total degree {dst_config.total_degree}")
    owned = owned_boxes(dst_shape, dst_config)[part_index : part_index + 1]
    return Region.from_box(required_boxes(dst_layer, owned, src_shape, offset)[0])


def place(config: Config, devices: DeviceGraph | int) -> tuple[int, ...]:
    """Identity placement: partition ``i`` runs on device ``i``."""
    count = devices if isinstance(devices, int) else len(devices)
    if config.total_degree > count:
        raise PlacementError(f"config {config} needs {config.total_degree} devices, only {count} available")
    return tuple(range(config.total_degree))


def box_volumes(boxes: np.ndarray) -> np.ndarray:
    return np.prod(boxes[..., 1] - boxes[..., 0], axis=-1)

