"""Constant-order policies for lost-sales inventory systems with lead times:
costs, optimal levels, Chernoff rates, optimality-gap bounds and simulation."""

__version__ = "0.1.0"

from .distributions import Demand, MonteCarloFallbackWarning  # noqa: E402
from .numerics import NumericalDiagnostic  # noqa: E402
from .policies import CostParams, best_constant_order, best_constant_order_finite  # noqa: E402
from .rates import RateInfo, chernoff_rate  # noqa: E402
from .bounds import exponential_bound, opt_interval, table1, theorem1_bound  # noqa: E402
from .simulator import PolicySpec, simulate_average_cost  # noqa: E402

__all__ = [
    "Demand", "MonteCarloFallbackWarning", "NumericalDiagnostic", "CostParams",
    "best_constant_order", "best_constant_order_finite", "RateInfo", "chernoff_rate",
    "exponential_bound", "opt_interval", "table1", "theorem1_bound", "PolicySpec",
    "simulate_average_cost",
]
