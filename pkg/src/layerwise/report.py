"""Cost breakdowns and (de)serialization of strategies."""

from __future__ import annotations

import json
from typing import Mapping

from .config import Config, check_config
from .cost import (
    CostTables,
    Strategy,
    _first_input_shape,
    evaluate_strategy,
    sync_bytes,
    transfer_bytes,
)
from .errors import ConfigError, GraphError, StrategyError
from .graph import ComputationGraph


def strategy_to_json(
    graph: ComputationGraph,
    strategy: Mapping[str, Config],
    cost: float,
    eliminations: int,
    final_graph_nodes: int,
) -> dict:
    return {
        "cost_seconds": cost,
        "layers": {lid: strategy[lid].to_json() for lid in graph.layer_ids},
        "eliminations": eliminations,
        "final_graph_nodes": final_graph_nodes,
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def load_strategy(graph: ComputationGraph, text: str, device_count: int | None = None) -> Strategy:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"strategy file is not valid JSON: {exc}") from None
    layers = doc.get("layers") if isinstance(doc, dict) else None
    if not isinstance(layers, dict):
        raise GraphError("strategy document needs a 'layers' object")
    strategy = {}
    for lid, entry in layers.items():
        if lid not in graph:
            raise StrategyError(f"strategy names unknown layer {lid!r}")
        if not isinstance(entry, dict):
            raise StrategyError(f"layer {lid!r}: config must be an object")
        config = Config.from_json(entry)
        try:
            check_config(graph[lid], graph.shape(lid), config, device_count)
        except ConfigError as exc:
            raise StrategyError(f"layer {lid!r}: invalid config {config}: {exc}") from None
        strategy[lid] = config
    missing = [lid for lid in graph.layer_ids if lid not in strategy]
    if missing:
        raise StrategyError(f"strategy is missing layer(s) {missing}")
    return strategy


def breakdown(
    graph: ComputationGraph,
    tables: CostTables,
    strategy: Mapping[str, Config],
    with_bytes: bool = False,
) -> dict:
    """Per-layer compute / sync / inbound transfer seconds plus totals.

    ``total`` is the table evaluation itself, so it matches the planner's
    reported cost bit for bit.
    """
    idx = tables.indices(graph, strategy)
    rows = []
    sums = {"compute": 0.0, "sync": 0.0, "transfer": 0.0}
    for lid in graph.layer_ids:
        i = idx[lid]
        inbound = 0.0
        for e in graph.in_edges(lid):
            inbound += float(tables.xfer[e.id][idx[e.src], i])
        row = {
            "layer": lid,
            "kind": graph[lid].kind_name,
            "config": strategy[lid].to_json(),
            "compute": float(tables.compute[lid][i]),
            "sync": float(tables.sync[lid][i]),
            "transfer": inbound,
        }
        if with_bytes:
            row["sync_bytes"] = int(
                sum(sync_bytes(graph[lid], _first_input_shape(graph, lid), graph.shape(lid), strategy[lid]))
            )
            row["transfer_bytes"] = sum(
                transfer_bytes(graph, e, strategy[e.src], strategy[lid]) for e in graph.in_edges(lid)
            )
        for k in sums:
            sums[k] += row[k]
        rows.append(row)
    totals = dict(sums, total=evaluate_strategy(graph, tables, strategy))
    if with_bytes:
        totals["sync_bytes"] = sum(r["sync_bytes"] for r in rows)
        totals["transfer_bytes"] = sum(r["transfer_bytes"] for r in rows)
    return {"totals": totals, "layers": rows}


def _cfg(c: dict) -> str:
    return "n={sample} c={channel} h={height} w={width}".format(**c)


def format_breakdown(report: dict, title: str = "") -> str:
    with_bytes = "sync_bytes" in report["totals"]
    lines = [title] if title else []
    header = f"{'layer':<16} {'kind':<8} {'config':<22} {'compute':>11} {'sync':>11} {'transfer':>11}"
    if with_bytes:
        header += f" {'sync B':>13} {'xfer B':>13}"
    lines.append(header)
    for r in report["layers"]:
        line = (
            f"{r['layer']:<16} {r['kind']:<8} {_cfg(r['config']):<22} "
            f"{r['compute']:>11.4e} {r['sync']:>11.4e} {r['transfer']:>11.4e}"
        )
        if with_bytes:
            line += f" {r['sync_bytes']:>13d} {r['transfer_bytes']:>13d}"
        lines.append(line)
    t = report["totals"]
    lines.append(
        f"totals: compute {t['compute']:.6e} s, sync {t['sync']:.6e} s, "
        f"transfer {t['transfer']:.6e} s, total {t['total']:.6e} s"
    )
    if with_bytes:
        lines.append(f"bytes: sync {t['sync_bytes']}, transfer {t['transfer_bytes']}")
    for key in ("final_graph_nodes", "eliminations", "strategies_visited", "search_seconds", "table_seconds"):
        if key in report:
            lines.append(f"{key.replace('_', ' ')}: {report[key]}")
    return "\n".join(lines) + "\n"
