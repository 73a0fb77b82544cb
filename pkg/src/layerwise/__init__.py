"""Layer-wise parallelization planning for convolutional networks."""

from .baselines import baseline_strategy
from .config import Config, Region, enumerate_configs, owned_region, required_input_region
from .cost import CostTables, build_cost_tables, evaluate_strategy
from .elimination import PlanResult, plan, plan_tables
from .errors import (
    BudgetExceededError,
    ConfigError,
    GraphError,
    PlannerError,
    ReductionLimitError,
    SearchLimitError,
    StrategyError,
)
from .graph import ComputationGraph, DeviceGraph, TensorShape, infer_shapes, parse_device_graph, parse_network
from .models import builtin_model
from .oracle import RandomGraphSpec, brute_force_plan, random_series_parallel_graph

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "ComputationGraph",
    "Config",
    "ConfigError",
    "CostTables",
    "DeviceGraph",
    "GraphError",
    "PlanResult",
    "PlannerError",
    "RandomGraphSpec",
    "ReductionLimitError",
    "Region",
    "SearchLimitError",
    "StrategyError",
    "TensorShape",
    "baseline_strategy",
    "brute_force_plan",
    "build_cost_tables",
    "builtin_model",
    "enumerate_configs",
    "evaluate_strategy",
    "infer_shapes",
    "owned_region",
    "parse_device_graph",
    "parse_network",
    "plan",
    "plan_tables",
    "random_series_parallel_graph",
    "required_input_region",
]
