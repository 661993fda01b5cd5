from .economic import DispatchProblem, DispatchResult, apply_dispatch, economic_dispatch, merit_order
from .power_flow import dc_power_flow, default_slack

__all__ = [
    "DispatchProblem",
    "DispatchResult",
    "apply_dispatch",
    "dc_power_flow",
    "default_slack",
    "economic_dispatch",
    "merit_order",
]
