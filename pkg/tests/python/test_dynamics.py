from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from inertiaforge.config import DynamicsConfig
from inertiaforge.dispatch import dc_power_flow
from inertiaforge.dynamics import (
    FaultScenario,
    RocofReport,
    apply_fault,
    apply_faults,
    get_dynamics_engine,
    power_flow_residual,
    rocof_series,
    run_scenarios,
    simulate,
    simulate_multi_fault,
    steady_state,
)
from inertiaforge.errors import GridInputError, NumericalError
from inertiaforge.grid import Bus, BusKind, GridModel, Line, homogeneous_variant, synth_two_cluster
from inertiaforge.spectral import HomogeneousParams, analytic_delta_omega, build_laplacian, slow_modes

from conftest import path_grid

TIGHT = DynamicsConfig(rtol=1e-11, atol=1e-13)


def _magnitude(grid: GridModel, scenario: FaultScenario, cfg: DynamicsConfig | None = None) -> float:
    traj = run_scenarios(grid, [scenario], "nonlinear", cfg)
    return RocofReport.from_trajectory(traj, scenario.dt, grid.generator_mask()).magnitude


def test_residual_examples(two_bus: GridModel) -> None:
    np.testing.assert_allclose(power_flow_residual(two_bus, np.zeros(2)), two_bus.powers())
    theta = np.array([np.arcsin(0.5), 0.0])
    np.testing.assert_allclose(power_flow_residual(two_bus, theta), 0.0, atol=1e-15)
    barbell = synth_two_cluster(5, 1.0, 0.05, 2)
    theta = np.random.default_rng(0).normal(scale=0.1, size=barbell.n)
    assert abs(power_flow_residual(barbell, theta).sum()) < 1e-12


def test_steady_state_two_bus(two_bus: GridModel) -> None:
    theta = steady_state(two_bus)
    assert theta[0] - theta[1] == pytest.approx(np.arcsin(0.5), abs=1e-12)
    assert np.abs(power_flow_residual(two_bus, theta)).max() < 1e-12


def test_steady_state_close_to_dc_for_small_angles() -> None:
    grid = synth_two_cluster(10, 1.0, 0.05, 4)
    theta = steady_state(grid)
    dc = dc_power_flow(grid, grid.powers())
    assert np.abs(power_flow_residual(grid, theta)).max() < 1e-8 * np.abs(grid.powers()).max()
    assert np.abs(theta - dc).max() < 0.01 * np.abs(dc).max()


def test_steady_state_zero_power() -> None:
    np.testing.assert_array_equal(steady_state(path_grid([1.0, 1.0])), np.zeros(3))


def test_steady_state_infeasible_transfer() -> None:
    grid = path_grid([1.0], [1.5, -1.5])
    with pytest.raises(NumericalError, match="no stationary state found"):
        steady_state(grid, DynamicsConfig(newton_max_iter=20))


def test_fault_turns_generator_into_load() -> None:
    grid = GridModel(
        (
            Bus(1, BusKind.GENERATOR, 380.0, power=900e6, inertia=3e7, damping=1e6),
            Bus(2, BusKind.LOAD, 380.0, power=-900e6, damping=1e6),
        ),
        (Line(1, 2, 0.03),),
    )
    faulted = apply_fault(grid, FaultScenario(bus=1, delta_p=900e6))
    bus = faulted.bus(1)
    assert bus.kind is BusKind.LOAD
    assert bus.power == 0.0
    assert bus.inertia == 0.0
    assert bus.damping == 1e6
    assert grid.bus(1).kind is BusKind.GENERATOR


def test_zero_loss_only_reclassifies(barbell: GridModel) -> None:
    faulted = apply_fault(barbell, FaultScenario(bus=1, delta_p=0.0))
    assert faulted.bus(1).power == barbell.bus(1).power
    assert faulted.bus(1).inertia == 0.0


def test_power_step_keeps_inertia(barbell: GridModel) -> None:
    faulted = apply_fault(barbell, FaultScenario(bus=2, delta_p=0.01, remove_inertia=False))
    assert faulted.bus(2).power == pytest.approx(barbell.bus(2).power - 0.01)
    assert faulted.bus(2).kind is barbell.bus(2).kind


@pytest.mark.parametrize(
    ("scenario", "message"),
    [
        (FaultScenario(bus=2, delta_p=0.01), "cannot fault load bus 2"),
        (FaultScenario(bus=1, delta_p=5.0), "less than delta_p"),
        (FaultScenario(bus=99, delta_p=0.01), "unknown bus id 99"),
    ],
)
def test_fault_preconditions(barbell: GridModel, scenario: FaultScenario, message: str) -> None:
    with pytest.raises(GridInputError, match=message):
        apply_fault(barbell, scenario)


def test_scenario_validation() -> None:
    with pytest.raises(GridInputError, match="does not match t_sim"):
        FaultScenario(bus=1, delta_p=1.0, n_sim=9)
    with pytest.raises(GridInputError, match="steps_per_interval must be >= 50"):
        FaultScenario(bus=1, delta_p=1.0, steps_per_interval=20)
    with pytest.raises(GridInputError, match="delta_p must be >= 0"):
        FaultScenario(bus=1, delta_p=-1.0)
    scenario = FaultScenario(bus=1, delta_p=1.0)
    assert scenario.step == pytest.approx(0.01)
    assert scenario.n_steps == 500


def test_simultaneous_faults_need_distinct_buses(barbell: GridModel) -> None:
    with pytest.raises(GridInputError, match="must be distinct"):
        apply_faults(barbell, [FaultScenario(bus=1, delta_p=0.01), FaultScenario(bus=1, delta_p=0.01)])
    with pytest.raises(GridInputError, match="share t_sim"):
        apply_faults(
            barbell,
            [FaultScenario(bus=1, delta_p=0.01), FaultScenario(bus=3, delta_p=0.01, t_sim=10.0, n_sim=20)],
        )


def test_unknown_engine() -> None:
    with pytest.raises(ValueError, match="Unsupported dynamics engine 'euler'"):
        get_dynamics_engine("euler")


def test_unfaulted_grid_stays_stationary(barbell: GridModel) -> None:
    theta0 = steady_state(barbell)
    traj = simulate(barbell, theta0, FaultScenario(bus=1, delta_p=0.0))
    assert np.abs(traj.omega).max() < 1e-10
    zero_loss = run_scenarios(barbell, [FaultScenario(bus=1, delta_p=0.0)])
    assert np.abs(zero_loss.omega).max() < 1e-10


def test_linear_simulation_matches_spectral_response() -> None:
    grid = homogeneous_variant(synth_two_cluster(5, 1.0, 0.05, 3), 1.0, 0.1)
    delta_p = 1.0
    scenario = FaultScenario(bus=1, delta_p=delta_p, remove_inertia=False)
    traj = run_scenarios(grid, [scenario], "linear", DynamicsConfig(rtol=1e-10, atol=1e-12))

    modes = slow_modes(build_laplacian(grid), grid.n, grid.bus_ids)
    expected = analytic_delta_omega(modes, HomogeneousParams(1.0, 0.1), 1, delta_p, traj.times)
    assert np.abs(traj.omega - expected).max() < 1e-6 * delta_p / 1.0


def test_linear_energy_never_increases() -> None:
    grid = homogeneous_variant(synth_two_cluster(5, 1.0, 0.05, 3), 1.0, 0.1)
    scenario = FaultScenario(bus=1, delta_p=0.5, remove_inertia=False)
    traj = run_scenarios(grid, [scenario], "linear", DynamicsConfig(rtol=1e-10, atol=1e-12))

    faulted = apply_fault(grid, scenario)
    powers = faulted.powers()
    inertia = faulted.inertias()
    damping = faulted.dampings()
    laplacian = build_laplacian(faulted).toarray()
    # post-fault equilibrium drifts uniformly at omega_sync
    omega_sync = powers.sum() / damping.sum()
    theta_sync = np.linalg.lstsq(laplacian, powers - damping * omega_sync, rcond=None)[0]

    offset = traj.theta - theta_sync - np.outer(traj.times, np.ones(grid.n)) * omega_sync
    slip = traj.omega - omega_sync
    energy = 0.5 * (slip**2 * inertia).sum(axis=1) + 0.5 * np.einsum("ti,ij,tj->t", offset, laplacian, offset)
    assert omega_sync < 0
    assert np.all(np.diff(energy) <= 1e-8 * energy[0])
    assert energy[-1] < energy[0]


def test_two_bus_matches_scalar_ode(two_bus: GridModel) -> None:
    scenario = FaultScenario(bus=1, delta_p=0.2, remove_inertia=False)
    traj = run_scenarios(two_bus, [scenario], "nonlinear", TIGHT)

    p1, p2 = 0.5 - 0.2, -0.5

    def rhs(_t, y):
        theta1, theta2, omega1 = y
        return [omega1, (p2 + np.sin(theta1 - theta2)) / 0.1, p1 - np.sin(theta1 - theta2) - 0.1 * omega1]

    reference = solve_ivp(
        rhs,
        (0.0, 5.0),
        [traj.theta[0, 0], traj.theta[0, 1], 0.0],
        method="DOP853",
        t_eval=traj.times,
        rtol=1e-13,
        atol=1e-14,
    )
    theta1, theta2, omega1 = reference.y
    omega2 = (p2 + np.sin(theta1 - theta2)) / 0.1
    assert np.abs(traj.omega[:, 0] - omega1).max() < 1e-8
    assert np.abs(traj.omega[1:, 1] - omega2[1:]).max() < 1e-8
    assert np.abs(traj.theta[:, 0] - theta1).max() < 1e-8


def test_long_time_frequency_offset() -> None:
    grid = synth_two_cluster(4, 1.0, 0.5, 3, damping_pu=0.5)
    delta_p = 0.01
    scenario = FaultScenario(bus=1, delta_p=delta_p, t_sim=60.0, dt=0.5, n_sim=120)
    traj = run_scenarios(grid, [scenario])
    expected = -delta_p / grid.dampings().sum()
    np.testing.assert_allclose(traj.omega[-1], expected, rtol=0.01)


def test_step_refinement_changes_little(barbell: GridModel) -> None:
    coarse = run_scenarios(barbell, [FaultScenario(bus=1, delta_p=0.01)], "nonlinear", TIGHT)
    fine = run_scenarios(barbell, [FaultScenario(bus=1, delta_p=0.01, steps_per_interval=100)], "nonlinear", TIGHT)
    a = coarse.omega[coarse.sample_indices(0.5)]
    b = fine.omega[fine.sample_indices(0.5)]
    assert np.abs(a - b).max() < 1e-8 * np.abs(a).max()


def test_single_fault_list_equals_simulate(barbell: GridModel) -> None:
    scenario = FaultScenario(bus=3, delta_p=0.01)
    theta0 = steady_state(barbell)
    direct = simulate(apply_fault(barbell, scenario), theta0, scenario)
    listed = simulate_multi_fault(barbell, theta0, [scenario])
    np.testing.assert_array_equal(direct.omega, listed.omega)


def test_two_faults_are_worse_than_one(barbell: GridModel) -> None:
    one = _magnitude(barbell, FaultScenario(bus=1, delta_p=0.01))
    traj = run_scenarios(barbell, [FaultScenario(bus=1, delta_p=0.01), FaultScenario(bus=8, delta_p=0.01)])
    two = RocofReport.from_trajectory(traj, 0.5, barbell.generator_mask()).magnitude
    assert two > one
    stationary = run_scenarios(barbell, [FaultScenario(bus=1, delta_p=0.0), FaultScenario(bus=8, delta_p=0.0)])
    assert np.abs(stationary.omega).max() < 1e-10


def test_magnitude_is_linear_in_small_losses() -> None:
    grid = synth_two_cluster(8, 1.0, 0.05, 6)
    small = _magnitude(grid, FaultScenario(bus=3, delta_p=0.004))
    large = _magnitude(grid, FaultScenario(bus=3, delta_p=0.008))
    assert large == pytest.approx(2.0 * small, rel=0.01)


def test_magnitude_invariant_under_relabelling(barbell: GridModel) -> None:
    reordered = replace(barbell, buses=tuple(reversed(barbell.buses)), lines=tuple(reversed(barbell.lines)))
    scenario = FaultScenario(bus=3, delta_p=0.01)
    assert _magnitude(reordered, scenario) == pytest.approx(_magnitude(barbell, scenario), rel=1e-6)


def test_rocof_series_shape(barbell: GridModel) -> None:
    traj = run_scenarios(barbell, [FaultScenario(bus=1, delta_p=0.01)])
    assert rocof_series(traj, 0.5).shape == (10, barbell.n)
    with pytest.raises(GridInputError, match="11 requested"):
        rocof_series(traj, 0.5, 11)
