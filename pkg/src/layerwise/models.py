"""Builtin benchmark networks.

Layer tallies follow the usual convention of counting convolution, pooling
and fully-connected layers; the explicit input node is extra, so
``graph.layer_count`` is 6 / 11 / 21 for LeNet-5 / AlexNet / VGG-16.
"""

from __future__ import annotations

import re

from .errors import GraphError
from .graph import ComputationGraph, Concat, Conv2D, FullyConnected, Input, Layer, Pool2D, infer_shapes

INCEPTION_DEFAULT_MODULES = 10


class _Builder:
    def __init__(self):
        self.layers: list[Layer] = []

    def add(self, lid: str, kind, *inputs: str) -> str:
        self.layers.append(Layer(lid, kind, tuple(inputs)))
        return lid

    def conv(self, lid, src, out, k, s=1, p=0) -> str:
        k = k if isinstance(k, tuple) else (k, k)
        p = p if isinstance(p, tuple) else (p, p)
        return self.add(lid, Conv2D(out, k, (s, s), p), src)

    def pool(self, lid, src, k, s, p=0) -> str:
        return self.add(lid, Pool2D((k, k), (s, s), (p, p)), src)

    def fc(self, lid, src, out) -> str:
        return self.add(lid, FullyConnected(out), src)

    def build(self, batch: int) -> ComputationGraph:
        return infer_shapes(ComputationGraph(self.layers, batch))


def lenet5(batch: int = 32) -> ComputationGraph:
    b = _Builder()
    x = b.add("input", Input(1, 32, 32))
    x = b.conv("conv1", x, 6, 5)
    x = b.pool("pool1", x, 2, 2)
    x = b.conv("conv2", x, 16, 5)
    x = b.pool("pool2", x, 2, 2)
    x = b.fc("fc1", x, 120)
    b.fc("fc2", x, 10)
    return b.build(batch)


def alexnet(batch: int = 32) -> ComputationGraph:
    b = _Builder()
    x = b.add("input", Input(3, 227, 227))
    x = b.conv("conv1", x, 96, 11, s=4)
    x = b.pool("pool1", x, 3, 2)
    x = b.conv("conv2", x, 256, 5, p=2)
    x = b.pool("pool2", x, 3, 2)
    x = b.conv("conv3", x, 384, 3, p=1)
    x = b.conv("conv4", x, 384, 3, p=1)
    x = b.conv("conv5", x, 256, 3, p=1)
    x = b.pool("pool5", x, 3, 2)
    x = b.fc("fc6", x, 4096)
    x = b.fc("fc7", x, 4096)
    b.fc("fc8", x, 1000)
    return b.build(batch)


def vgg16(batch: int = 32) -> ComputationGraph:
    b = _Builder()
    x = b.add("input", Input(3, 224, 224))
    n = 0
    for block, (convs, width) in enumerate([(2, 64), (2, 128), (3, 256), (3, 512), (3, 512)], start=1):
        for _ in range(convs):
            n += 1
            x = b.conv(f"conv{n}", x, width, 3, p=1)
        x = b.pool(f"pool{block}", x, 2, 2)
    x = b.fc("fc6", x, 4096)
    x = b.fc("fc7", x, 4096)
    b.fc("fc8", x, 1000)
    return b.build(batch)


# nodes added per Inception module (convs, pool and the joining concat)
INCEPTION_MODULE_NODES = 11


def _inception_module(b: _Builder, x: str, i: int) -> str:
    """Inception block with split 3x3 branches on an 8x8, 2048-channel map."""
    p = f"m{i}_"
    b1 = b.conv(p + "b1_1x1", x, 320, 1)

    b2 = b.conv(p + "b2_1x1", x, 384, 1)
    b2a = b.conv(p + "b2_1x3", b2, 384, (1, 3), p=(0, 1))
    b2b = b.conv(p + "b2_3x1", b2, 384, (3, 1), p=(1, 0))

    b3 = b.conv(p + "b3_1x1", x, 448, 1)
    b3 = b.conv(p + "b3_3x3", b3, 384, 3, p=1)
    b3a = b.conv(p + "b3_1x3", b3, 384, (1, 3), p=(0, 1))
    b3b = b.conv(p + "b3_3x1", b3, 384, (3, 1), p=(1, 0))

    b4 = b.pool(p + "b4_pool", x, 3, 1, p=1)
    b4 = b.conv(p + "b4_1x1", b4, 192, 1)
    return b.add(p + "concat", Concat("channel"), b1, b2a, b2b, b3a, b3b, b4)


def inception_chain(modules: int = INCEPTION_DEFAULT_MODULES, batch: int = 32) -> ComputationGraph:
    """``modules`` Inception blocks in series behind one input node."""
    if modules < 1:
        raise GraphError(f"inception_chain needs at least one module, got {modules}")
    b = _Builder()
    x = b.add("input", Input(2048, 8, 8))
    for i in range(1, modules + 1):
        x = _inception_module(b, x, i)
    return b.build(batch)


MODELS = {"lenet5": lenet5, "alexnet": alexnet, "vgg16": vgg16, "inception_chain": inception_chain}

_CHAIN = re.compile(r"^inception_chain(?:[(:](\d+)\)?)?$")


def builtin_model(name: str, batch: int = 32) -> ComputationGraph:
    """Build a named model; ``inception_chain(k)`` or ``inception_chain:k`` sets the module count."""
    if batch < 1:
        raise GraphError(f"batch must be >= 1, got {batch}")
    m = _CHAIN.match(name)
    if m:
        k = int(m.group(1)) if m.group(1) else INCEPTION_DEFAULT_MODULES
        return inception_chain(k, batch)
    if name not in MODELS:
        raise GraphError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    return MODELS[name](batch)
