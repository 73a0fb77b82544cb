import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerwise.errors import GraphError, ShapeError
from layerwise.graph import (
    ComputationGraph,
    Concat,
    Conv2D,
    DeviceGraph,
    FullyConnected,
    Input,
    Layer,
    Pool2D,
    TensorShape,
    infer_shapes,
    network_to_json,
    parse_device_graph,
    parse_network,
)
from layerwise.models import INCEPTION_MODULE_NODES, builtin_model


def _net(*layers, batch=1):
    return json.dumps({"batch": batch, "layers": list(layers)})


def test_minimal_conv_network_keeps_spatial_extent():
    g = parse_network(
        _net(
            {"id": "x", "kind": "input", "channel": 3, "height": 8, "width": 8},
            {"id": "c", "kind": "conv2d", "inputs": ["x"], "out_channels": 4, "kernel": 3, "stride": 1, "padding": 1},
        )
    )
    assert g.node_count == 2
    assert g.shape("c") == (1, 4, 8, 8)


def test_dangling_input_is_named():
    text = _net(
        {"id": "x", "kind": "input", "channel": 3},
        {"id": "s", "kind": "softmax", "inputs": ["ghost"]},
    )
    with pytest.raises(GraphError, match="ghost"):
        parse_network(text)


@pytest.mark.parametrize(
    "layers, message",
    [
        ([{"id": "x", "kind": "input", "channel": 1}, {"id": "x", "kind": "softmax", "inputs": ["x"]}], "duplicate"),
        ([{"id": "x", "kind": "input", "channel": 1}, {"id": "s", "kind": "softmax", "inputs": []}], "input"),
        ([{"id": "x", "kind": "input", "channel": 1}, {"id": "j", "kind": "concat", "inputs": ["x"]}], "2"),
        ([{"id": "x", "kind": "warp", "channel": 1}], "unknown layer kind"),
    ],
)
def test_invalid_networks(layers, message):
    with pytest.raises(GraphError, match=message):
        parse_network(_net(*layers))


def test_cycle_rejected():
    layers = [
        Layer("x", Input(1)),
        Layer("a", Concat(), ("x", "b")),
        Layer("b", FullyConnected(2), ("a",)),
    ]
    with pytest.raises(GraphError, match="cycle"):
        ComputationGraph(layers, batch=1)


def test_infer_conv_and_pool():
    g = infer_shapes(
        ComputationGraph(
            [
                Layer("x", Input(3, 32, 32)),
                Layer("c", Conv2D(64, (5, 5)), ("x",)),
                Layer("p", Pool2D((2, 2), (2, 2)), ("c",)),
            ],
            batch=32,
        )
    )
    assert g.shape("c") == (32, 64, 28, 28)
    assert g.shape("p") == (32, 64, 14, 14)


def test_concat_adds_channels():
    g = infer_shapes(
        ComputationGraph(
            [
                Layer("x", Input(3, 35, 35)),
                Layer("a", Conv2D(64, (1, 1)), ("x",)),
                Layer("b", Conv2D(48, (1, 1)), ("x",)),
                Layer("j", Concat(), ("a", "b")),
            ],
            batch=32,
        )
    )
    assert g.shape("j") == (32, 112, 35, 35)


def test_concat_mismatch_is_shape_error():
    layers = [
        Layer("x", Input(3, 8, 8)),
        Layer("a", Conv2D(4, (1, 1)), ("x",)),
        Layer("b", Pool2D((2, 2), (2, 2)), ("x",)),
        Layer("j", Concat(), ("a", "b")),
    ]
    with pytest.raises(ShapeError):
        infer_shapes(ComputationGraph(layers, batch=1))


def test_infer_is_idempotent():
    g = builtin_model("alexnet")
    again = infer_shapes(g)
    assert [again.shape(l) for l in g.layer_ids] == [g.shape(l) for l in g.layer_ids]


@pytest.mark.parametrize("name, count", [("lenet5", 6), ("alexnet", 11), ("vgg16", 21)])
def test_builtin_layer_counts(name, count):
    g = builtin_model(name, 32)
    assert g.layer_count == count
    assert g.node_count == count + 1


def test_inception_module_size():
    one = builtin_model("inception_chain(1)")
    assert one.node_count == 1 + INCEPTION_MODULE_NODES
    assert builtin_model("inception_chain:3").node_count == 1 + 3 * INCEPTION_MODULE_NODES
    assert builtin_model("inception_chain").node_count >= 102
    last = one.layer_ids[-1]
    assert one.shape(last) == TensorShape(32, 2048, 8, 8)


def test_topological_order_respects_edges():
    for name in ("lenet5", "alexnet", "vgg16", "inception_chain(2)"):
        g = builtin_model(name)
        pos = {lid: i for i, lid in enumerate(g.topological_order())}
        assert all(pos[e.src] < pos[e.dst] for e in g.edges)


def test_parallel_edges_get_distinct_ids():
    g = infer_shapes(ComputationGraph([Layer("x", Input(2)), Layer("j", Concat(), ("x", "x"))], batch=1))
    assert len({e.id for e in g.edges}) == 2
    assert g.shape("j") == (1, 4, 1, 1)


def test_network_json_round_trip():
    g = builtin_model("inception_chain(1)", 8)
    back = parse_network(json.dumps(network_to_json(g)))
    assert back.layer_ids == g.layer_ids
    assert [back.shape(l) for l in back.layer_ids] == [g.shape(l) for l in g.layer_ids]


def test_device_links_pass_through():
    doc = {
        "devices": [{"id": i, "flops": 1e13} for i in range(4)],
        "links": [{"src": 0, "dst": 1, "bandwidth": 2.5e10}],
        "default_bandwidth": 1e10,
    }
    dg = parse_device_graph(json.dumps(doc))
    assert dg.bandwidth(0, 1) == 2.5e10
    assert dg.bandwidth(1, 0) == 1e10
    assert dg.bandwidth(2, 2) == np.inf


def test_device_default_bandwidth_fill():
    dg = parse_device_graph(json.dumps({"devices": [{"id": 0, "flops": 1}, {"id": 1, "flops": 1}], "default_bandwidth": 1e10}))
    assert dg.bandwidth(0, 1) == 1e10


def test_device_errors():
    with pytest.raises(GraphError, match="duplicate"):
        parse_device_graph(json.dumps({"devices": [{"id": 0, "flops": 1}, {"id": 0, "flops": 1}], "default_bandwidth": 1}))
    with pytest.raises(GraphError, match="default_bandwidth"):
        parse_device_graph(json.dumps({"devices": [{"id": 0, "flops": 1}, {"id": 1, "flops": 1}]}))


def test_cluster_bandwidths():
    dg = DeviceGraph.cluster(8)
    assert dg.bandwidth(0, 3) == 2e10
    assert dg.bandwidth(0, 4) == 1.25e10


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 4),
    st.integers(1, 8),
    st.integers(4, 20),
    st.integers(1, 5),
    st.integers(1, 3),
    st.integers(0, 2),
)
def test_conv_output_extent(n, c, size, k, s, p):
    if size + 2 * p < k:
        return
    g = infer_shapes(ComputationGraph([Layer("x", Input(c, size, size)), Layer("y", Conv2D(3, (k, k), (s, s), (p, p)), ("x",))], n))
    assert g.shape("y") == (n, 3, (size + 2 * p - k) // s + 1, (size + 2 * p - k) // s + 1)
