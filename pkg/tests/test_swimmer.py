import logging
import math

import numpy as np
import pytest

from morphosim.core.errors import AllRestartsDivergedError, IntegrationDivergenceError
from morphosim.core.timeseries import IntegratorConfig
from morphosim.services.actuators import SpringConfig, joint_stiffness_closed_form
from morphosim.services.swimmer import (
    ActuationParams,
    ChainDynamics,
    OptimizerSettings,
    StiffnessProfile,
    SwimmerConfig,
    actuation_map,
    default_k_grid,
    homogeneous_oracle,
    initial_state,
    optimize_stiffness,
    simulate_swimmer,
    swimmer_energy,
)

CFG = SwimmerConfig()
FAST = IntegratorConfig(dt=2e-3, t_end=5.0, record_stride=10)
GAIT = ActuationParams(amplitude=0.3, frequency=2.0)
HOMOGENEOUS = StiffnessProfile.homogeneous(0.05)


# ---------------------------------------------------------------------------
# Configuration and chain geometry
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(lengths=(0.2, 0.05, 0.05, 0.05)),
    dict(lengths=(0.3, 0.05, 0.05, 0.05, 0.05)),
    dict(c_normal=1.0, c_tangential=1.0),
    dict(k_min=0.5, k_max=0.1),
    dict(passive_law="cubic"),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SwimmerConfig(**kwargs)


def test_actuation_and_profile_validation():
    with pytest.raises(ValueError):
        ActuationParams(amplitude=math.pi / 2)
    with pytest.raises(ValueError):
        ActuationParams(frequency=0.0)
    with pytest.raises(ValueError):
        StiffnessProfile((0.1, 0.1, 0.1))
    with pytest.raises(ValueError):
        simulate_swimmer(CFG, StiffnessProfile.homogeneous(1.0), GAIT, 5.0, FAST)
    with pytest.raises(ValueError):
        simulate_swimmer(CFG, HOMOGENEOUS, GAIT, 2.0, FAST)


def test_straight_chain_centres():
    dyn = ChainDynamics(CFG, HOMOGENEOUS, GAIT)
    centres = dyn.centres(initial_state(CFG))
    np.testing.assert_allclose(centres[:, 0], [0.0, -0.125, -0.175, -0.225, -0.275])
    np.testing.assert_allclose(centres[:, 1], 0.0, atol=1e-15)


def test_mass_matrix_is_symmetric_positive_definite():
    dyn = ChainDynamics(CFG, HOMOGENEOUS, GAIT)
    theta = np.array([0.1, -0.3, 0.4, 0.2, -0.5])
    M = dyn.mass_matrix(*dyn.jacobians(theta))
    np.testing.assert_allclose(M, M.T, atol=1e-15)
    assert np.all(np.linalg.eigvalsh(M) > 0)
    assert M[0, 0] == pytest.approx(np.sum(CFG.masses))


def test_tunable_pretension_gives_requested_stiffness():
    cfg = SwimmerConfig(passive_law="tunable")
    for k in (0.005, 0.05, 0.5):
        F = cfg.pretension_for(k)
        assert joint_stiffness_closed_form(cfg.joint_geometry, SpringConfig(cfg.spring_K, F)) == pytest.approx(k)


def test_tunable_elastic_energy_matches_torque():
    cfg = SwimmerConfig(passive_law="tunable")
    dyn = ChainDynamics(cfg, StiffnessProfile((0.02, 0.05, 0.1, 0.2)), ActuationParams(amplitude=0.0))
    h = 1e-6
    for q in (0.05, 0.3):
        plus = dyn.elastic_energy(np.array([q + h, 0.0, 0.0, 0.0]))
        minus = dyn.elastic_energy(np.array([q - h, 0.0, 0.0, 0.0]))
        torque = -dyn.spring_torques(np.array([q, 0.0, 0.0, 0.0]))[0]
        assert (plus - minus) / (2 * h) == pytest.approx(torque, rel=1e-6)


# ---------------------------------------------------------------------------
# Simulation properties
# ---------------------------------------------------------------------------

def test_zero_amplitude_produces_no_motion():
    result = simulate_swimmer(CFG, HOMOGENEOUS, ActuationParams(amplitude=0.0, frequency=2.0), 5.0, FAST)
    assert abs(result.metrics.speed) < 1e-4
    assert result.metrics.power == 0.0
    assert result.trace.channels == ("head_x", "head_y", "heading", "joint1", "joint2", "joint3", "joint4")


def test_mirrored_actuation_gives_same_speed():
    base = simulate_swimmer(CFG, HOMOGENEOUS, GAIT, 5.0, FAST)
    mirrored = simulate_swimmer(CFG, HOMOGENEOUS, ActuationParams(0.3, 2.0, phase=math.pi), 5.0, FAST)
    assert abs(base.metrics.speed - mirrored.metrics.speed) < 1e-6
    assert abs(base.metrics.speed) > 1e-6
    assert base.metrics.thrust == base.metrics.speed


def test_rotated_start_leaves_metrics_unchanged():
    base = simulate_swimmer(CFG, HOMOGENEOUS, GAIT, 5.0, FAST)
    rotated = simulate_swimmer(CFG, HOMOGENEOUS, GAIT, 5.0, FAST, heading0=0.7)
    assert rotated.metrics.speed == pytest.approx(base.metrics.speed, abs=1e-9)
    assert rotated.metrics.power == pytest.approx(base.metrics.power, abs=1e-9)
    np.testing.assert_allclose(
        rotated.trace.column("joint1"), base.trace.column("joint1"), atol=1e-9,
    )


def test_unactuated_swimmer_is_passive():
    icfg = IntegratorConfig(dt=1e-3, t_end=5.0, record_stride=10)
    result = simulate_swimmer(
        CFG, HOMOGENEOUS, ActuationParams(amplitude=0.0, frequency=2.0), 5.0, icfg,
        velocity0=(0.05, 0.0), joint_angles0=(0.3, -0.2, 0.2, -0.1),
    )
    energy = np.array([swimmer_energy(CFG, HOMOGENEOUS, row).total for row in result.states.samples])
    assert energy[0] > 0
    assert np.all(np.diff(energy) <= 1e-9 * energy[0])
    assert energy[-1] < 0.5 * energy[0]


def test_tunable_law_swimmer_runs():
    cfg = SwimmerConfig(passive_law="tunable")
    result = simulate_swimmer(cfg, HOMOGENEOUS, GAIT, 5.0, FAST)
    assert np.isfinite(result.metrics.speed)
    assert np.isfinite(result.metrics.power)


# ---------------------------------------------------------------------------
# Oracle and optimizer
# ---------------------------------------------------------------------------

def peaked(k):
    return -sum((ki - 0.05) ** 2 for ki in k)


def test_oracle_single_element_grid():
    result = homogeneous_oracle(CFG, GAIT, [0.07], 5.0, FAST, objective=peaked, workers=1)
    assert result.k_best == 0.07
    assert len(result.table) == 1


def test_oracle_rejects_out_of_box_grid():
    with pytest.raises(ValueError):
        homogeneous_oracle(CFG, GAIT, [0.001, 0.05], 5.0, FAST, objective=peaked)
    with pytest.raises(ValueError):
        homogeneous_oracle(CFG, GAIT, [], 5.0, FAST, objective=peaked)


def test_oracle_records_diverged_cells():
    def objective(k):
        if k[0] > 0.2:
            raise IntegrationDivergenceError(1.0, [math.inf])
        return peaked(k)

    result = homogeneous_oracle(CFG, GAIT, default_k_grid(CFG), 5.0, FAST, objective=objective, workers=1)
    diverged = [cell.k for cell in result.table if cell.diverged]
    assert diverged and all(k > 0.2 for k in diverged)
    assert all(math.isnan(cell.thrust) for cell in result.table if cell.diverged)
    assert result.k_best < 0.2


def test_oracle_warns_when_best_sits_on_grid_edge(caplog):
    with caplog.at_level(logging.WARNING):
        result = homogeneous_oracle(CFG, GAIT, [0.01, 0.02, 0.04], 5.0, FAST, objective=lambda k: k[0], workers=1)
    assert result.k_best == 0.04
    assert any("grid edge" in record.getMessage() for record in caplog.records)


def test_optimizer_recovers_quadratic_optimum():
    target = (0.02, 0.08, 0.15, 0.3)

    def objective(k):
        return -sum((a - b) ** 2 for a, b in zip(k, target))

    settings = OptimizerSettings(restarts=3, seed=1, max_evaluations=4000)
    result = optimize_stiffness(CFG, GAIT, settings, 5.0, FAST, objective=objective, workers=1)
    np.testing.assert_allclose(result.profile_best.k, target, atol=1e-3)
    assert result.metric_best >= result.oracle.metric_best
    for e in result.history:
        assert all(CFG.k_min <= k <= CFG.k_max for k in e.k)
    assert {e.restart for e in result.history} == {0, 1, 2}


def test_optimizer_never_falls_below_oracle():
    settings = OptimizerSettings(restarts=2, seed=4, max_evaluations=15)
    result = optimize_stiffness(CFG, GAIT, settings, 5.0, FAST, objective=peaked, workers=1)
    assert result.metric_best >= result.oracle.metric_best
    assert result.improvement >= 0


def test_optimizer_seed_fixes_history():
    settings = OptimizerSettings(restarts=3, seed=9, max_evaluations=30)
    a = optimize_stiffness(CFG, GAIT, settings, 5.0, FAST, objective=peaked, workers=1)
    b = optimize_stiffness(CFG, GAIT, settings, 5.0, FAST, objective=peaked, workers=1)
    assert [e.k for e in a.history] == [e.k for e in b.history]


def test_optimizer_raises_when_every_restart_diverges():
    grid = [0.01, 0.05]
    calls = []

    def objective(k):
        calls.append(k)
        if len(calls) <= len(grid):
            return peaked(k)
        raise IntegrationDivergenceError(0.5, [math.nan])

    settings = OptimizerSettings(restarts=2, max_evaluations=10)
    with pytest.raises(AllRestartsDivergedError):
        optimize_stiffness(CFG, GAIT, settings, 5.0, FAST, k_grid=grid, objective=objective, workers=1)


def test_optimizer_settings_validation():
    with pytest.raises(ValueError):
        OptimizerSettings(method="cma-es")
    with pytest.raises(ValueError):
        OptimizerSettings(restarts=0)


def test_oracle_and_actuation_map_agree_on_real_runs():
    grid = [0.02, 0.1]
    first = homogeneous_oracle(CFG, GAIT, grid, 5.0, FAST, workers=1)
    again = homogeneous_oracle(CFG, GAIT, grid, 5.0, FAST, workers=1)
    assert first == again
    cells = actuation_map(CFG, [2.0], [0.3], grid, FAST, workers=1)
    assert len(cells) == 1
    assert cells[0].k_best == first.k_best
    assert cells[0].thrust == first.metric_best


def test_default_grid_spans_box_exactly():
    grid = default_k_grid(CFG)
    assert grid[0] == CFG.k_min
    assert grid[-1] == CFG.k_max
    assert all(CFG.k_min <= k <= CFG.k_max for k in grid)
    assert default_k_grid(CFG, 1) == [CFG.k_min]

    def boxed(k):
        StiffnessProfile(k).check_box(CFG)
        return peaked(k)

    result = homogeneous_oracle(CFG, GAIT, grid, 5.0, FAST, objective=boxed, workers=1)
    assert len(result.table) == len(grid)


def test_optimizer_reaches_lower_bound_through_box_check():
    def softest_wins(k):
        StiffnessProfile(k).check_box(CFG)
        return -sum(k)

    settings = OptimizerSettings(restarts=2, seed=3, max_evaluations=300)
    result = optimize_stiffness(CFG, GAIT, settings, 5.0, FAST, objective=softest_wins, workers=1)
    np.testing.assert_allclose(result.profile_best.k, (CFG.k_min,) * 4, rtol=0.05)
    for e in result.history:
        assert all(CFG.k_min <= k <= CFG.k_max for k in e.k)
    assert result.profile_best.check_box(CFG) is None


# ---------------------------------------------------------------------------
# Default scenario on the real objective
# ---------------------------------------------------------------------------

DEFAULT_RUN = IntegratorConfig(dt=1e-3, t_end=10.0, record_stride=10)


def test_default_gait_speed_baseline():
    result = simulate_swimmer(CFG, HOMOGENEOUS, ActuationParams(), 10.0, DEFAULT_RUN)
    assert result.metrics.speed == pytest.approx(0.006556, rel=2e-3)


@pytest.fixture(scope="module")
def default_optimizations():
    return [
        optimize_stiffness(CFG, ActuationParams(), OptimizerSettings(seed=seed), 10.0, DEFAULT_RUN)
        for seed in (0, 1)
    ]


def test_default_oracle_peaks_inside_grid(default_optimizations):
    oracle = default_optimizations[0].oracle
    grid = default_k_grid(CFG)
    assert [cell.k for cell in oracle.table] == grid
    assert grid[0] < oracle.k_best < grid[-1]
    assert oracle.k_best == pytest.approx(0.0406, rel=0.01)
    assert not any(cell.diverged for cell in oracle.table)


def test_heterogeneous_profile_beats_homogeneous(default_optimizations):
    first, second = default_optimizations
    for result in default_optimizations:
        assert result.metric_best > result.oracle.metric_best
        result.profile_best.check_box(CFG)
    assert first.oracle == second.oracle
    assert abs(first.metric_best - second.metric_best) <= 0.1 * max(first.metric_best, second.metric_best)
