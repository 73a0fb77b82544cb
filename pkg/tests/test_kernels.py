import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerwise import kernels
from layerwise.cost import build_cost_tables
from layerwise.elimination import ReducedGraph
from layerwise.graph import Device, DeviceGraph
from layerwise.models import builtin_model
from layerwise.oracle import RandomGraphSpec, brute_force, random_series_parallel_graph

needs_compiled = pytest.mark.skipif(kernels.compiled is None, reason="compiled extension not built")


def test_backend_reports_selection():
    assert kernels.BACKEND in ("compiled", "python")
    assert "python" in kernels.available()


def test_env_var_forces_fallback():
    env = dict(os.environ, LAYERWISE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from layerwise import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_min_plus_reference():
    e1 = np.array([[0.0, 5.0], [5.0, 0.0]])
    best, arg = kernels.python.min_plus(e1, np.array([1.0, 2.0]), e1)
    assert best.tolist() == [[1.0, 6.0], [6.0, 2.0]]
    assert arg.tolist() == [[0, 0], [0, 1]]


@needs_compiled
@settings(max_examples=100, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_min_plus_backends_identical(a, b, c, seed):
    rng = np.random.default_rng(seed)
    e1, node, e2 = rng.random((a, b)), rng.random(b), rng.random((b, c))
    # ties on purpose
    e1[:, 0] = e1[:, -1]
    node[0] = node[-1]
    bp, ap = kernels.python.min_plus(e1, node, e2)
    bc, ac = kernels.compiled.min_plus(e1, node, e2)
    assert np.array_equal(bp, bc) and np.array_equal(ap, ac)


@needs_compiled
@pytest.mark.parametrize("model, n", [("lenet5", 4), ("alexnet", 4), ("inception_chain(1)", 8)])
def test_transfer_tables_identical(model, n):
    g = builtin_model(model)
    rng = np.random.default_rng(n)
    dg = DeviceGraph(tuple(Device(i, 1e13) for i in range(n)), rng.uniform(1e9, 3e10, (n, n)))
    a = build_cost_tables(g, dg, backend=kernels.python)
    b = build_cost_tables(g, dg, backend=kernels.compiled)
    for e in g.edges:
        assert np.array_equal(a.xfer[e.id], b.xfer[e.id]), e.id


@needs_compiled
@pytest.mark.parametrize("seed", range(30))
def test_brute_force_backends_identical(seed):
    g, t = random_series_parallel_graph(RandomGraphSpec(seed, node_count=7, max_configs_per_layer=4))
    rg = ReducedGraph.from_tables(g, t)
    p = brute_force(rg, backend=kernels.python)
    c = brute_force(rg, backend=kernels.compiled)
    assert p.indices == c.indices and p.cost == c.cost and p.visited == c.visited


@needs_compiled
def test_brute_force_float_ties_identical():
    # real-valued tables with exact ties across every position
    g, t = random_series_parallel_graph(RandomGraphSpec(3, node_count=5, max_configs_per_layer=3))
    for arr in t.node_cost.values():
        arr[:] = 0.1
    for arr in t.xfer.values():
        arr[:] = 0.3
    rg = ReducedGraph.from_tables(g, t)
    p = brute_force(rg, backend=kernels.python)
    c = brute_force(rg, backend=kernels.compiled)
    assert p.indices == c.indices == {l: 0 for l in g.layer_ids}
