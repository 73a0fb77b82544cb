"""Exception hierarchy shared across the planner."""


class PlannerError(Exception):
    """Base class for all planner errors."""


class GraphError(PlannerError, ValueError):
    """Malformed network or device description."""


class ShapeError(GraphError):
    """Shape inference produced an invalid or inconsistent extent."""


class ConfigError(PlannerError, ValueError):
    """A parallelization config is not valid for a layer."""


class PlacementError(PlannerError, ValueError):
    """Not enough devices to place a config."""


class StrategyError(PlannerError, ValueError):
    """A strategy is missing layers or uses unknown configs."""


class SearchLimitError(PlannerError):
    """A search exceeded its configured size limit."""


class ReductionLimitError(SearchLimitError):
    """The reduced graph still has more nodes than the enumeration bound."""

    def __init__(self, node_count: int, bound: int):
        self.node_count = node_count
        self.bound = bound
        super().__init__(
            f"final graph has K={node_count} nodes after eliminations, "
            f"exceeding the enumeration bound of {bound}"
        )


class BudgetExceededError(SearchLimitError):
    """Exhaustive search space is larger than the allowed budget."""

    def __init__(self, space_size: int, budget: int):
        self.space_size = space_size
        self.budget = budget
        super().__init__(
            f"strategy space has {space_size} candidates, exceeding the budget of {budget}"
        )
