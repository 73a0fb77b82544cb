import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerwise.config import (
    ALL_ONES,
    Config,
    Region,
    box_volumes,
    check_config,
    enumerate_configs,
    owned_boxes,
    owned_region,
    parallelizable_dims,
    place,
    required_boxes,
    required_input_region,
)
from layerwise.errors import ConfigError, PlacementError
from layerwise.graph import Conv2D, Flatten, FullyConnected, Layer, Pool2D, Softmax, TensorShape
from region_oracle import all_ranges, hull, is_interval, marked_rows, window_dependencies


def _conv(k, s=1, p=0, out=4):
    return Conv2D(out, (k, k), (s, s), (p, p))


def _pool(k, s, p=0):
    return Pool2D((k, k), (s, s), (p, p))


def test_parallelizable_dims_table():
    assert parallelizable_dims(_conv(3)) == ("sample", "channel", "height", "width")
    assert parallelizable_dims(_pool(2, 2)) == ("sample", "channel", "height", "width")
    assert parallelizable_dims(FullyConnected(10)) == ("sample", "channel")
    assert parallelizable_dims(Flatten(), TensorShape(32, 25088, 1, 1)) == ("sample", "channel")


def test_fc_configs_on_four_devices():
    cs = enumerate_configs(Layer("fc", FullyConnected(4096), ("x",)), TensorShape(32, 4096), 4)
    got = [(c.sample, c.channel) for c in cs]
    assert sorted(got) == [(1, 1), (1, 2), (1, 4), (2, 1), (2, 2), (4, 1)]
    assert all(c.height == c.width == 1 for c in cs)


def test_single_device_only_all_ones():
    assert enumerate_configs(Layer("c", _conv(3), ("x",)), TensorShape(32, 64, 56, 56), 1) == [ALL_ONES]


def test_spatial_config_present():
    cs = enumerate_configs(Layer("c", _conv(3), ("x",)), TensorShape(1, 4, 8, 8), 4)
    assert Config.of(height=2, width=2) in cs
    assert len(cs) == len(set(cs))
    assert cs == sorted(cs, key=lambda c: c.degrees)


def test_check_config_rejects():
    fc = Layer("fc", FullyConnected(10), ("x",))
    with pytest.raises(ConfigError):
        check_config(fc, TensorShape(32, 10), Config.of(channel=3))
    with pytest.raises(ConfigError):
        check_config(fc, TensorShape(32, 10), Config.of(height=2))
    with pytest.raises(ConfigError):
        check_config(fc, TensorShape(32, 10), Config.of(sample=4, channel=2), device_count=4)


def test_owned_region_split():
    shape = TensorShape(1, 1, 8, 1)
    assert owned_region(shape, Config.of(height=2), 0)["height"] == (0, 4)
    assert owned_region(shape, Config.of(height=2), 1)["height"] == (4, 8)
    assert owned_region(shape, ALL_ONES, 0) == Region.full(shape)


def test_owned_region_row_major():
    r = owned_region(TensorShape(32, 4096), Config.of(sample=2, channel=2), 3)
    assert r["sample"] == (16, 32)
    assert r["channel"] == (2048, 4096)


def test_required_region_examples():
    conv = Layer("c", _conv(3, 1, 1), ("x",))
    r = required_input_region(conv, Config.of(height=2), 0, TensorShape(1, 1, 8, 8), TensorShape(1, 4, 8, 8))
    assert r["height"] == (0, 5)
    assert r["channel"] == (0, 1)

    pool = Layer("p", _pool(2, 2), ("x",))
    r = required_input_region(pool, Config.of(height=2), 0, TensorShape(1, 1, 4, 4), TensorShape(1, 1, 2, 2))
    assert r["height"] == (0, 2)
    r = required_input_region(pool, Config.of(height=2), 0, TensorShape(1, 1, 8, 8), TensorShape(1, 1, 4, 4))
    assert r["height"] == (0, 4)

    fc = Layer("fc", FullyConnected(4096), ("x",))
    r = required_input_region(fc, Config.of(channel=2), 0, TensorShape(32, 25088), TensorShape(32, 4096))
    assert r["channel"] == (0, 25088)
    assert r["sample"] == (0, 32)


def test_softmax_requires_only_owned():
    shape = TensorShape(32, 1000)
    for c in (Config.of(sample=4), Config.of(channel=4), Config.of(sample=2, channel=2)):
        own = owned_boxes(shape, c)
        assert np.array_equal(required_boxes(Softmax(), own, shape), own)


def test_pool_keeps_owned_channels():
    own = owned_boxes(TensorShape(1, 8, 4, 4), Config.of(channel=2))
    req = required_boxes(_pool(2, 2), own, TensorShape(1, 8, 8, 8))
    assert req[1, 1].tolist() == [4, 8]


def test_place_identity():
    assert place(Config.of(sample=4), 4) == (0, 1, 2, 3)
    assert place(Config.of(sample=2), 16) == (0, 1)
    with pytest.raises(PlacementError):
        place(Config.of(sample=5), 4)


def test_config_json_round_trip():
    c = Config.of(sample=2, width=4)
    assert Config.from_json(c.to_json()) == c
    assert str(c) == "{s=2, c=1, h=1, w=4}"


@st.composite
def shape_and_config(draw):
    dims = [draw(st.sampled_from([1, 2, 3, 4, 6])) for _ in range(4)]
    degrees = [draw(st.sampled_from([d for d in range(1, n + 1) if n % d == 0])) for n in dims]
    return TensorShape(*dims), Config(tuple(degrees))


@settings(max_examples=200, deadline=None)
@given(shape_and_config())
def test_owned_regions_partition_tensor(sc):
    shape, config = sc
    boxes = owned_boxes(shape, config)
    assert len(boxes) == config.total_degree
    assert box_volumes(boxes).sum() == shape.volume
    for a, b in itertools.combinations(range(len(boxes)), 2):
        assert Region.from_box(boxes[a]).intersect(Region.from_box(boxes[b])).is_empty


@pytest.mark.parametrize("kind", ["conv", "pool"])
def test_window_regions_match_marking(kind):
    # one axis at a time; the 2D rule is the product of the two axes
    for size in range(1, 13):
        for k in range(1, 5):
            for s in range(1, 6):
                for p in range(0, k + 1):
                    dep = window_dependencies(size, k, s, p)
                    if dep.shape[0] < 1:
                        continue
                    layer = _conv(k, s, p) if kind == "conv" else _pool(k, s, p)
                    ranges = all_ranges(dep.shape[0])
                    own = np.zeros((len(ranges), 4, 2), dtype=np.int64)
                    own[:, :, 1] = 1
                    own[:, 2] = ranges
                    req = required_boxes(layer, own, TensorShape(1, 1, size, 1))
                    for (lo, hi), box in zip(ranges, req):
                        want = marked_rows(dep, lo, hi)
                        got = set(range(*box[2]))
                        assert got == (want if is_interval(want) else hull(want))
                        assert want <= got


@settings(max_examples=60, deadline=None)
@given(
    st.integers(2, 10), st.integers(2, 10), st.integers(1, 4), st.integers(1, 3), st.integers(0, 2), st.data()
)
def test_2d_conv_region_contains_marked_set(h, w, k, s, p, data):
    if h + 2 * p < k or w + 2 * p < k or p >= k:
        return
    dep_h = window_dependencies(h, k, s, p)
    dep_w = window_dependencies(w, k, s, p)
    oh, ow = dep_h.shape[0], dep_w.shape[0]
    dh = data.draw(st.sampled_from([d for d in range(1, oh + 1) if oh % d == 0]))
    dw = data.draw(st.sampled_from([d for d in range(1, ow + 1) if ow % d == 0]))
    config = Config.of(height=dh, width=dw)
    out_shape = TensorShape(1, 3, oh, ow)
    in_shape = TensorShape(1, 2, h, w)
    layer = Layer("c", _conv(k, s, p, out=3), ("x",))
    for part in range(config.total_degree):
        own = owned_region(out_shape, config, part)
        marked = np.zeros((h, w), dtype=bool)
        for y in range(*own["height"]):
            for x in range(*own["width"]):
                marked |= np.outer(dep_h[y], dep_w[x])
        r = required_input_region(layer, config, part, in_shape, out_shape)
        box = np.zeros((h, w), dtype=bool)
        box[slice(*r["height"]), slice(*r["width"])] = True
        assert not (marked & ~box).any()
        if s <= k:
            assert np.array_equal(marked, box)
        assert r["channel"] == (0, 2)
