"""Command-line front end.

Machine-readable output (strategy JSON, eval/compare reports) goes to stdout
or ``--out`` and is byte-for-byte deterministic.  Wall-clock timings are only
ever written to stderr.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .baselines import BASELINES, baseline_strategy
from .cost import build_cost_tables, evaluate_strategy, load_measured_costs
from .elimination import DEFAULT_K_BOUND, plan_tables
from .errors import PlannerError, SearchLimitError
from .graph import DeviceGraph, network_to_json, parse_device_graph, parse_network
from .models import builtin_model
from .oracle import DEFAULT_BUDGET, brute_force_plan
from .report import breakdown, dumps, format_breakdown, load_strategy, strategy_to_json

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_LIMIT = 3
DEFAULT_DEVICES = 4


def _read(path: str) -> str:
    return Path(path).read_text()


def _load_graph(args):
    if args.network:
        return parse_network(_read(args.network))
    return builtin_model(args.model or "vgg16", args.batch)


def _load_devices(args) -> DeviceGraph:
    if args.device_file:
        return parse_device_graph(_read(args.device_file))
    return DeviceGraph.cluster(args.devices if args.devices is not None else DEFAULT_DEVICES)


def _tables(args, graph, devices):
    tables = build_cost_tables(graph, devices)
    if getattr(args, "costs", None):
        tables = load_measured_costs(graph, tables, _read(args.costs))
    return tables


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _side_report(args, report: dict, title: str) -> None:
    sys.stderr.write(dumps(report) if args.json else format_breakdown(report, title))


def cmd_plan(args) -> int:
    graph = _load_graph(args)
    devices = _load_devices(args)
    start = time.perf_counter()
    tables = _tables(args, graph, devices)
    table_seconds = time.perf_counter() - start
    result = plan_tables(graph, tables, args.k_bound)
    doc = strategy_to_json(graph, result.strategy, result.cost, result.eliminations, result.final_graph_nodes)
    _emit(args, dumps(doc))
    report = breakdown(graph, tables, result.strategy, args.bytes)
    report.update(
        final_graph_nodes=result.final_graph_nodes,
        eliminations=result.eliminations,
        search_seconds=round(result.search_seconds, 6),
        table_seconds=round(table_seconds, 6),
    )
    _side_report(args, report, f"plan: {len(devices)} devices")
    return EXIT_OK


def cmd_brute(args) -> int:
    graph = _load_graph(args)
    devices = _load_devices(args)
    tables = _tables(args, graph, devices)
    result = brute_force_plan(graph, tables, args.budget)
    doc = strategy_to_json(graph, result.strategy, result.cost, 0, graph.node_count)
    _emit(args, dumps(doc))
    report = breakdown(graph, tables, result.strategy, args.bytes)
    report.update(strategies_visited=result.visited, search_seconds=round(result.search_seconds, 6))
    _side_report(args, report, f"brute force: {len(devices)} devices")
    return EXIT_OK


def cmd_eval(args) -> int:
    graph = _load_graph(args)
    devices = _load_devices(args)
    strategy = load_strategy(graph, _read(args.strategy), len(devices))
    tables = _tables(args, graph, devices)
    report = breakdown(graph, tables, strategy, args.bytes)
    _emit(args, dumps(report) if args.json else format_breakdown(report))
    return EXIT_OK


def cmd_compare(args) -> int:
    graph = _load_graph(args)
    devices = _load_devices(args)
    tables = _tables(args, graph, devices)
    strategies = {kind: baseline_strategy(kind, graph, devices) for kind in BASELINES}
    strategies["optimal"] = plan_tables(graph, tables, args.k_bound).strategy
    rows = {}
    for kind, strategy in strategies.items():
        totals = breakdown(graph, tables, strategy, args.bytes)["totals"]
        totals["communication"] = totals["sync"] + totals["transfer"]
        totals["total"] = evaluate_strategy(graph, tables, strategy)
        rows[kind] = totals
    if args.json:
        _emit(args, dumps({"devices": len(devices), "strategies": rows}))
        return EXIT_OK
    lines = [f"{'strategy':<10} {'compute':>12} {'sync':>12} {'transfer':>12} {'comm':>12} {'total':>12}"]
    for kind, t in rows.items():
        line = (
            f"{kind:<10} {t['compute']:>12.5e} {t['sync']:>12.5e} {t['transfer']:>12.5e} "
            f"{t['communication']:>12.5e} {t['total']:>12.5e}"
        )
        if args.bytes:
            line += f"  sync {t['sync_bytes']} B, transfer {t['transfer_bytes']} B"
        lines.append(line)
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_emit_model(args) -> int:
    _emit(args, dumps(network_to_json(builtin_model(args.model or "vgg16", args.batch))))
    return EXIT_OK


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="layerwise", description="Layer-wise parallelization planner for CNNs.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    net = common.add_mutually_exclusive_group()
    net.add_argument("--model", help="builtin model: lenet5, alexnet, vgg16, inception_chain[(k)]")
    net.add_argument("--network", metavar="FILE", help="network description (JSON)")
    dev = common.add_mutually_exclusive_group()
    dev.add_argument("--devices", type=_positive, metavar="N", help=f"modeled GPU cluster size (default {DEFAULT_DEVICES})")
    dev.add_argument("--device-file", metavar="FILE", help="device graph description (JSON)")
    common.add_argument("--batch", type=_positive, default=32, help="batch size for builtin models (default 32)")
    common.add_argument("--out", metavar="FILE", help="write the main output here instead of stdout")
    common.add_argument("--json", action="store_true", help="JSON reports instead of text")
    common.add_argument("--bytes", action="store_true", help="also report raw cross-device bytes")
    common.add_argument("--costs", metavar="FILE", help="measured cost tables overriding the analytic model")

    k_bound = argparse.ArgumentParser(add_help=False)
    k_bound.add_argument("--k-bound", type=_positive, default=DEFAULT_K_BOUND, help="max final-graph size")

    p = sub.add_parser("plan", parents=[common, k_bound], help="optimal strategy by elimination")
    p.set_defaults(func=cmd_plan)
    p = sub.add_parser("brute", parents=[common], help="optimal strategy by exhaustive search")
    p.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET, help="max strategies to enumerate")
    p.set_defaults(func=cmd_brute)
    p = sub.add_parser("eval", parents=[common], help="cost breakdown of a strategy file")
    p.add_argument("--strategy", required=True, metavar="FILE")
    p.set_defaults(func=cmd_eval)
    p = sub.add_parser("compare", parents=[common, k_bound], help="data / model / owt / optimal side by side")
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("emit-model", parents=[common], help="write a builtin model as network JSON")
    p.set_defaults(func=cmd_emit_model)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SearchLimitError as exc:
        print(f"layerwise: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (PlannerError, ValueError, OSError) as exc:
        print(f"layerwise: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
