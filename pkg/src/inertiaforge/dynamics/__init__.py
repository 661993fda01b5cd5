from .engine import DynamicsEngine, LinearEngine, NonlinearEngine, get_dynamics_engine
from .fault import FaultScenario, apply_fault, apply_faults
from .rocof import (
    RocofFrame,
    RocofReport,
    disturbance_magnitude,
    frequency_traces,
    rocof_series,
    snapshot_frames,
    write_frames,
)
from .simulate import Trajectory, run_scenarios, simulate, simulate_multi_fault
from .steady_state import electrical_power, power_flow_residual, steady_state

__all__ = [
    "DynamicsEngine",
    "FaultScenario",
    "LinearEngine",
    "NonlinearEngine",
    "RocofFrame",
    "RocofReport",
    "Trajectory",
    "apply_fault",
    "apply_faults",
    "disturbance_magnitude",
    "electrical_power",
    "frequency_traces",
    "get_dynamics_engine",
    "power_flow_residual",
    "rocof_series",
    "run_scenarios",
    "simulate",
    "simulate_multi_fault",
    "snapshot_frames",
    "steady_state",
    "write_frames",
]
