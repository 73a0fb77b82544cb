# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops; must stay bit-identical to ``_pykernels``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def transfer_table(
    const cnp.int64_t[:, :, ::1] src_boxes,
    const cnp.int64_t[::1] src_offsets,
    const cnp.int64_t[:, :, ::1] dst_boxes,
    const cnp.int64_t[::1] dst_offsets,
    const double[:, ::1] bandwidth,
):
    cdef Py_ssize_t n_src = src_offsets.shape[0] - 1
    cdef Py_ssize_t n_dst = dst_offsets.shape[0] - 1
    out_arr = np.zeros((max(n_src, 0), max(n_dst, 0)))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p, q, k
    cdef cnp.int64_t lo, hi, vol
    cdef double t, best
    for i in range(n_src):
        for j in range(n_dst):
            best = 0.0
            for p in range(src_offsets[i + 1] - src_offsets[i]):
                for q in range(dst_offsets[j + 1] - dst_offsets[j]):
                    vol = 1
                    for k in range(4):
                        lo = src_boxes[src_offsets[i] + p, k, 0]
                        if dst_boxes[dst_offsets[j] + q, k, 0] > lo:
                            lo = dst_boxes[dst_offsets[j] + q, k, 0]
                        hi = src_boxes[src_offsets[i] + p, k, 1]
                        if dst_boxes[dst_offsets[j] + q, k, 1] < hi:
                            hi = dst_boxes[dst_offsets[j] + q, k, 1]
                        if hi <= lo:
                            vol = 0
                            break
                        vol *= hi - lo
                    t = (4.0 * <double>vol) / bandwidth[p, q]
                    if t > best:
                        best = t
            out[i, j] = best
    return out_arr


def min_plus(const double[:, ::1] e1, const double[::1] node, const double[:, ::1] e2):
    cdef Py_ssize_t a = e1.shape[0], b = e1.shape[1], c = e2.shape[1]
    best_arr = np.empty((a, c))
    arg_arr = np.zeros((a, c), dtype=np.int64)
    cdef double[:, ::1] best = best_arr
    cdef cnp.int64_t[:, ::1] arg = arg_arr
    cdef Py_ssize_t i, j, k
    cdef double head, v
    for i in range(a):
        for k in range(c):
            best[i, k] = INFINITY
        for j in range(b):
            head = node[j] + e1[i, j]
            for k in range(c):
                v = head + e2[j, k]
                if v < best[i, k]:
                    best[i, k] = v
                    arg[i, k] = j
    return best_arr, arg_arr


def brute_force(list node_costs, list attached):
    cdef Py_ssize_t n = len(node_costs)
    cdef Py_ssize_t d, e, m
    counts_arr = np.array([len(v) for v in node_costs], dtype=np.int64)
    node_off_arr = np.zeros(n + 1, dtype=np.int64)
    node_off_arr[1:] = np.cumsum(counts_arr)
    node_flat_arr = np.ascontiguousarray(np.concatenate(node_costs), dtype=np.float64)

    # per-position edge lists: other position, orientation, table offset, row stride
    edge_start_arr = np.zeros(n + 1, dtype=np.int64)
    others, dst_flags, tab_offs, strides, tables = [], [], [], [], []
    cursor = 0
    for d in range(n):
        for other, is_dst, table in attached[d]:
            others.append(other)
            dst_flags.append(1 if is_dst else 0)
            tab_offs.append(cursor)
            strides.append(table.shape[1])
            tables.append(np.ascontiguousarray(table, dtype=np.float64).ravel())
            cursor += table.size
        edge_start_arr[d + 1] = len(others)
    other_arr = np.array(others, dtype=np.int64)
    flag_arr = np.array(dst_flags, dtype=np.int64)
    off_arr = np.array(tab_offs, dtype=np.int64)
    stride_arr = np.array(strides, dtype=np.int64)
    tab_arr = np.concatenate(tables) if tables else np.zeros(1)

    cdef cnp.int64_t[::1] counts = counts_arr
    cdef cnp.int64_t[::1] node_off = node_off_arr
    cdef double[::1] node_flat = node_flat_arr
    cdef cnp.int64_t[::1] edge_start = edge_start_arr
    cdef cnp.int64_t[::1] other_v = other_arr if len(others) else np.zeros(1, dtype=np.int64)
    cdef cnp.int64_t[::1] flag_v = flag_arr if len(others) else np.zeros(1, dtype=np.int64)
    cdef cnp.int64_t[::1] off_v = off_arr if len(others) else np.zeros(1, dtype=np.int64)
    cdef cnp.int64_t[::1] stride_v = stride_arr if len(others) else np.zeros(1, dtype=np.int64)
    cdef double[::1] tab = tab_arr

    choice_arr = np.full(n, -1, dtype=np.int64)
    best_choice_arr = np.zeros(n, dtype=np.int64)
    partial_arr = np.zeros(n + 1)
    cdef cnp.int64_t[::1] choice = choice_arr
    cdef cnp.int64_t[::1] best_choice = best_choice_arr
    cdef double[::1] partial = partial_arr
    cdef double best = INFINITY, acc
    cdef cnp.int64_t visited = 0, pick, o
    if n == 0:
        return best_choice_arr, 0.0, 1

    d = 0
    while d >= 0:
        choice[d] += 1
        if choice[d] >= counts[d]:
            choice[d] = -1
            d -= 1
            continue
        pick = choice[d]
        acc = partial[d] + node_flat[node_off[d] + pick]
        for e in range(edge_start[d], edge_start[d + 1]):
            o = choice[other_v[e]]
            if flag_v[e]:
                acc = acc + tab[off_v[e] + o * stride_v[e] + pick]
            else:
                acc = acc + tab[off_v[e] + pick * stride_v[e] + o]
        if d == n - 1:
            visited += 1
            if acc < best:
                best = acc
                for m in range(n):
                    best_choice[m] = choice[m]
        else:
            partial[d + 1] = acc
            d += 1
    return best_choice_arr, best, visited
