"""Reference (numpy) implementations of the planner's inner loops.

These are used when the compiled ``_ckernels`` extension is unavailable and
serve as the cross-check for it.  Every routine performs floating-point
additions in exactly the same order as its compiled twin so results are
bit-identical.
"""

from __future__ import annotations

import numpy as np

BRUTE_CHUNK = 1 << 18


def transfer_table(
    src_boxes: np.ndarray,
    src_offsets: np.ndarray,
    dst_boxes: np.ndarray,
    dst_offsets: np.ndarray,
    bandwidth: np.ndarray,
) -> np.ndarray:
    """Bottleneck transfer time for every (src config, dst config) pair.

    Boxes of config ``i`` live at ``boxes[offsets[i]:offsets[i + 1]]``; the
    local position of a box inside its slice is its device id.  Entry
    ``[i, j]`` is the max over partition pairs of ``4 * overlap / bw``; the
    bandwidth diagonal is infinite so same-device pairs cost nothing.
    """
    n_src = len(src_offsets) - 1
    n_dst = len(dst_offsets) - 1
    out = np.zeros((n_src, n_dst))
    if n_src == 0 or n_dst == 0:
        return out
    # device id of every dst box within its own config slice
    dst_dev = np.arange(len(dst_boxes)) - np.repeat(dst_offsets[:-1], np.diff(dst_offsets))
    d_lo = dst_boxes[None, :, :, 0]
    d_hi = dst_boxes[None, :, :, 1]
    for i in range(n_src):
        sb = src_boxes[src_offsets[i] : src_offsets[i + 1]]
        lo = np.maximum(sb[:, None, :, 0], d_lo)
        hi = np.minimum(sb[:, None, :, 1], d_hi)
        vol = np.prod(np.maximum(hi - lo, 0), axis=2)
        t = (4.0 * vol) / bandwidth[: len(sb)][:, dst_dev]
        per_box = t.max(axis=0)
        out[i] = np.maximum.reduceat(per_box, dst_offsets[:-1])
    return out


def min_plus(e1: np.ndarray, node: np.ndarray, e2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``out[i, k] = min_j node[j] + e1[i, j] + e2[j, k]`` with the first minimizing ``j``."""
    total = (node[None, :] + e1)[:, :, None] + e2[None, :, :]
    arg = total.argmin(axis=1)
    best = np.take_along_axis(total, arg[:, None, :], axis=1)[:, 0, :]
    return best, arg.astype(np.int64)


def brute_force(
    node_costs: list[np.ndarray],
    attached: list[list[tuple[int, bool, np.ndarray]]],
) -> tuple[np.ndarray, float, int]:
    """Score every joint assignment; return (best index tuple, cost, visited).

    ``attached[d]`` lists edges whose later endpoint is position ``d`` as
    ``(other position, d_is_dst, table)``.  Costs accumulate position by
    position: node cost first, then attached edges in list order.
    Enumeration is lexicographic and only a strictly better cost replaces the
    incumbent, so ties resolve to the smallest index tuple.
    """
    counts = np.array([len(c) for c in node_costs], dtype=np.int64)
    total = int(np.prod(counts, dtype=object))
    # place values for mixed-radix decode, most significant = position 0
    radix = np.ones(len(counts), dtype=np.int64)
    for d in range(len(counts) - 2, -1, -1):
        radix[d] = radix[d + 1] * counts[d + 1]
    best_cost = np.inf
    best_flat = 0
    for start in range(0, total, BRUTE_CHUNK):
        flat = np.arange(start, min(start + BRUTE_CHUNK, total), dtype=np.int64)
        idx = (flat[:, None] // radix[None, :]) % counts[None, :]
        acc = np.zeros(len(flat))
        for d, cost in enumerate(node_costs):
            acc += cost[idx[:, d]]
            for other, is_dst, table in attached[d]:
                if is_dst:
                    acc += table[idx[:, other], idx[:, d]]
                else:
                    acc += table[idx[:, d], idx[:, other]]
        k = int(acc.argmin())
        if acc[k] < best_cost:
            best_cost = float(acc[k])
            best_flat = int(flat[k])
    best = (best_flat // radix) % counts
    return best.astype(np.int64), best_cost, total
