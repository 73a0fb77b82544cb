"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each row times one workload under both backends (best of N runs) and checks
that the two produce identical results.
"""

import argparse
import time

import numpy as np

from layerwise import kernels
from layerwise.cost import build_cost_tables
from layerwise.elimination import ReducedGraph
from layerwise.graph import DeviceGraph
from layerwise.models import builtin_model
from layerwise.oracle import brute_force


def best_of(repeat, fn):
    best, result = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def workloads():
    for model, n in (("alexnet", 4), ("vgg16", 8), ("inception_chain(3)", 16)):
        g = builtin_model(model)
        dg = DeviceGraph.cluster(n)

        def tables(backend, g=g, dg=dg):
            t = build_cost_tables(g, dg, backend)
            return [t.xfer[e.id] for e in g.edges]

        yield f"cost tables {model}/{n}", tables

    rng = np.random.default_rng(0)
    e1, node, e2 = rng.random((60, 60)), rng.random(60), rng.random((60, 60))

    def min_plus(backend):
        out = None
        for _ in range(50):
            out = backend.min_plus(e1, node, e2)
        return out

    yield "min-plus 60x60 (x50)", min_plus

    lenet = builtin_model("lenet5")
    rg = ReducedGraph.from_tables(lenet, build_cost_tables(lenet, DeviceGraph.cluster(4)))

    def brute(backend):
        r = brute_force(rg, backend=backend)
        return r.indices, r.cost

    yield "brute force lenet5/4", brute


def same(a, b) -> bool:
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if kernels.compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'workload':<34} {'python':>10} {'compiled':>10} {'speedup':>8}  identical")
    for name, fn in workloads():
        tp, rp = best_of(args.repeat, lambda: fn(kernels.python))
        tc, rc = best_of(args.repeat, lambda: fn(kernels.compiled))
        print(f"{name:<34} {tp * 1e3:>8.1f}ms {tc * 1e3:>8.1f}ms {tp / tc:>7.1f}x  {same(rp, rc)}")


if __name__ == "__main__":
    main()
