import math

import numpy as np
import pytest

from morphosim.core.errors import GapRangeError, IntegrationDivergenceError
from morphosim.core.timeseries import IntegratorConfig
from morphosim.services.actuators import (
    JointGeometry,
    JointOscillatorConfig,
    MagneticSpringModel,
    PidGains,
    PretensionSchedule,
    SineReference,
    SpringConfig,
    SpringPlant,
    default_magnetic_pair,
    joint_stiffness_closed_form,
    joint_torque,
    joint_torque_series_closed_form,
    joint_torque_series_coeffs,
    linear_joint_frequency,
    magnetic_force,
    magnetic_stiffness,
    matched_linear_plant,
    pid_tracking_experiment,
    simulate_joint_oscillator,
    step_frequency_report,
)

G = JointGeometry(r=0.01, d=0.03)


# ---------------------------------------------------------------------------
# Joint torque law
# ---------------------------------------------------------------------------

def test_torque_is_odd():
    rng = np.random.default_rng(7)
    theta = rng.uniform(-math.pi, math.pi, 10_000)
    s = SpringConfig(K=200.0, F=1.0)
    np.testing.assert_allclose(joint_torque(G, s, theta), -joint_torque(G, s, -theta), rtol=1e-15, atol=0)


def test_torque_rejects_deflection_beyond_pi():
    with pytest.raises(ValueError):
        joint_torque(G, SpringConfig(), 3.5)
    with pytest.raises(ValueError):
        joint_torque(G, SpringConfig(), -math.pi)
    with pytest.raises(ValueError):
        joint_torque(G, SpringConfig(), np.array([0.1, -math.pi]))
    assert joint_torque(G, SpringConfig(), math.pi) == pytest.approx(0.0, abs=1e-15)


def test_torque_at_quarter_turn():
    assert joint_torque(G, SpringConfig(K=200.0, F=1.0), math.pi / 2) == pytest.approx(0.03154, rel=1e-3)


@pytest.mark.parametrize("r, d", [(0.0, 0.03), (0.03, 0.01), (0.02, 0.02)])
def test_geometry_validation(r, d):
    with pytest.raises(ValueError):
        JointGeometry(r, d)


def test_linear_coefficient_matches_closed_form_on_random_joints():
    rng = np.random.default_rng(11)
    for _ in range(100):
        r = rng.uniform(0.005, 0.02)
        d = r + rng.uniform(0.005, 0.03)
        g = JointGeometry(r, d)
        s = SpringConfig(K=rng.uniform(10, 1000), F=rng.uniform(0.1, 10))
        c1 = joint_torque_series_coeffs(g, s).c1
        assert c1 == pytest.approx(s.F * d * r / (d - r), rel=1e-6)


def test_linear_coefficient_does_not_depend_on_spring_stiffness():
    reference = joint_torque_series_coeffs(G, SpringConfig(K=10.0, F=1.0)).c1
    for K in np.linspace(10.0, 1000.0, 12):
        c1 = joint_torque_series_coeffs(G, SpringConfig(K=K, F=1.0)).c1
        assert abs(c1 - reference) / reference < 1e-9
        assert joint_stiffness_closed_form(G, SpringConfig(K=K, F=1.0)) == pytest.approx(0.015, rel=1e-15)


def test_linear_coefficient_scales_with_pretension():
    base = joint_stiffness_closed_form(G, SpringConfig(K=200.0, F=1.0))
    for alpha in (0.5, 2.0, 7.3):
        scaled = joint_stiffness_closed_form(G, SpringConfig(K=200.0, F=alpha))
        assert scaled == pytest.approx(alpha * base, rel=1e-15)
    doubled = joint_torque_series_coeffs(G, SpringConfig(K=200.0, F=2.0)).c1
    assert doubled == pytest.approx(2.0 * joint_torque_series_coeffs(G, SpringConfig(K=200.0, F=1.0)).c1, rel=1e-9)


def test_cubic_coefficient_matches_closed_form():
    s = SpringConfig(K=200.0, F=1.0)
    numeric = joint_torque_series_coeffs(G, s)
    closed = joint_torque_series_closed_form(G, s)
    assert numeric.c3 == pytest.approx(closed.c3, rel=1e-5)
    assert numeric.c1 == pytest.approx(closed.c1, rel=1e-9)


def test_cubic_series_within_one_percent_up_to_point_two_rad():
    s = SpringConfig(K=200.0, F=1.0)
    coeffs = joint_torque_series_coeffs(G, s)
    theta = np.concatenate([np.linspace(-0.2, -1e-3, 200), np.linspace(1e-3, 0.2, 200)])
    exact = joint_torque(G, s, theta)
    series = coeffs.c1 * theta + coeffs.c3 * theta ** 3
    assert np.max(np.abs(exact - series) / np.abs(exact)) < 0.01


def test_pretension_schedule_presets():
    step = PretensionSchedule(f_before=0.1, f_after=2.0, t_step=5.0)
    assert step.pretension(4.999) == 0.1
    assert step.pretension(5.0) == 2.0
    np.testing.assert_array_equal(step.pretension(np.array([0.0, 6.0])), [0.1, 2.0])

    sine = PretensionSchedule(mode="sine", f_mean=1.0, f_amp=0.5, f_mod=5.0)
    assert sine.pretension(0.05) == pytest.approx(1.5)
    assert sine.spring_at(0.0).F == pytest.approx(1.0)

    with pytest.raises(ValueError):
        PretensionSchedule(mode="ramp")
    with pytest.raises(ValueError):
        PretensionSchedule(mode="sine", f_mean=0.2, f_amp=0.5)


# ---------------------------------------------------------------------------
# Joint oscillator
# ---------------------------------------------------------------------------

def test_overdamped_joint_relaxes_without_crossing_zero():
    schedule = PretensionSchedule(K=200.0, f_before=1.0, f_after=1.0, t_step=1.0)
    cfg = JointOscillatorConfig(inertia=1e-4, damping=0.1, theta0=0.01)
    trace = simulate_joint_oscillator(G, schedule, cfg, IntegratorConfig(dt=1e-4, t_end=2.0, record_stride=10))
    theta = trace.column("theta")
    assert np.all(theta > 0)
    assert np.all(np.diff(theta) <= 0)
    assert trace.channels == ("theta", "theta_dot", "F")


def test_step_time_must_fall_inside_run():
    schedule = PretensionSchedule(t_step=12.0)
    with pytest.raises(ValueError):
        simulate_joint_oscillator(G, schedule, JointOscillatorConfig(), IntegratorConfig(dt=1e-3, t_end=10.0))


def test_pretension_step_raises_frequency():
    schedule = PretensionSchedule(K=200.0, f_before=0.1, f_after=2.0, t_step=5.0)
    cfg = JointOscillatorConfig()
    trace = simulate_joint_oscillator(G, schedule, cfg, IntegratorConfig(dt=1e-3, t_end=10.0, record_stride=1))
    report = step_frequency_report(trace, G, schedule, cfg)

    assert report.ratio > 1.5
    expected = linear_joint_frequency(G, SpringConfig(200.0, 0.1), cfg.inertia)
    assert report.f_linear_before == pytest.approx(expected)
    assert abs(report.f_before - expected) / expected < 0.05
    np.testing.assert_array_equal(np.unique(trace.column("F")), [0.1, 2.0])


# ---------------------------------------------------------------------------
# Magnetic spring
# ---------------------------------------------------------------------------

def test_parametric_force_value():
    m = MagneticSpringModel(A=1e-6, z_off=0.01)
    assert magnetic_force(m, 0.01) == pytest.approx(6.25, rel=1e-12)
    assert magnetic_stiffness(m, 0.01) == pytest.approx(1250.0, rel=1e-12)


def test_force_decays_and_decreases():
    m = MagneticSpringModel(A=1e-6, z_off=0.01)
    assert magnetic_force(m, 10 * m.z_off) < 1e-4 * magnetic_force(m, 0.0)
    gaps = np.linspace(-0.009, 0.1, 1000)
    assert np.all(np.diff(magnetic_force(m, gaps)) < 0)


def test_stiff_pair_dominates_soft():
    stiff, soft = default_magnetic_pair()
    gaps = np.linspace(0.0, 0.05, 100)
    assert np.all(magnetic_force(stiff, gaps) >= magnetic_force(soft, gaps))
    assert soft.mode == "soft" and soft.A == pytest.approx(0.6 * stiff.A)


def test_gap_range_errors():
    m = MagneticSpringModel()
    with pytest.raises(GapRangeError):
        magnetic_force(m, -m.z_off)
    table = MagneticSpringModel.tabulated("stiff", [0.0, 0.01, 0.02], [6.0, 3.0, 1.0])
    with pytest.raises(GapRangeError):
        magnetic_force(table, 0.03)


def test_tabulated_interpolation_and_stiffness():
    table = MagneticSpringModel.tabulated("soft", [0.0, 0.01, 0.02], [6.0, 3.0, 1.0])
    assert magnetic_force(table, 0.005) == pytest.approx(4.5)
    assert magnetic_stiffness(table, 0.005) == pytest.approx(300.0)
    assert magnetic_stiffness(table, 0.02) == pytest.approx(200.0)


@pytest.mark.parametrize("gaps, forces", [
    ([0.0, 0.01], [1.0, 2.0]),
    ([0.01, 0.0], [2.0, 1.0]),
    ([0.0], [1.0]),
])
def test_tabulated_validation(gaps, forces):
    with pytest.raises(ValueError):
        MagneticSpringModel.tabulated("stiff", gaps, forces)


# ---------------------------------------------------------------------------
# PID tracking
# ---------------------------------------------------------------------------

PID_CFG = IntegratorConfig(dt=1e-4, t_end=4.0, record_stride=10)


def test_zero_reference_gives_zero_error():
    plant = SpringPlant(kind="magnetic")
    report = pid_tracking_experiment(plant, 0.1, PidGains(), SineReference(amp=0.0), PID_CFG)
    assert report.rms_error == 0.0
    assert report.trace.channels == ("z", "z_ref", "u")


def test_proportional_loop_matches_frequency_response():
    magnetic = SpringPlant(kind="magnetic")
    linear = matched_linear_plant(magnetic)
    assert linear.stiffness == pytest.approx(1250.0)

    gains = PidGains(kp=2000.0, ki=0.0, kd=0.0)
    reference = SineReference(amp=0.004, freq=2.0)
    report = pid_tracking_experiment(linear, 0.1, gains, reference, IntegratorConfig(dt=1e-4, t_end=6.0, record_stride=10))

    tail = report.trace.window(5.0, 6.1)
    amplitude = np.max(np.abs(tail.column("z") - linear.gap_eq))
    w = 2.0 * math.pi * reference.freq
    gain = 2000.0 / math.hypot(1250.0 + 2000.0 - 0.1 * w * w, 1.0 * w)
    assert amplitude == pytest.approx(reference.amp * gain, rel=0.02)


def test_magnetic_plant_is_harder_to_track_than_its_linearization():
    magnetic = SpringPlant(kind="magnetic")
    linear = matched_linear_plant(magnetic)
    reference = SineReference()
    lin = pid_tracking_experiment(linear, 0.1, PidGains(), reference, PID_CFG)
    mag = pid_tracking_experiment(magnetic, 0.1, PidGains(), reference, PID_CFG)
    assert mag.rms_error > lin.rms_error > 0


def test_saturation_bounds_command():
    gains = PidGains(kp=2e4, ki=2e5, kd=60.0, saturation=1.0)
    report = pid_tracking_experiment(SpringPlant(kind="linear", k_lin=1250.0), 0.1, gains, SineReference(), PID_CFG)
    assert np.max(np.abs(report.trace.column("u"))) <= 1.0


def test_pid_validation():
    with pytest.raises(ValueError):
        PidGains(kp=-1.0)
    with pytest.raises(ValueError):
        PidGains(saturation=0.0)
    with pytest.raises(ValueError):
        pid_tracking_experiment(SpringPlant(), 0.0, PidGains(), SineReference(), PID_CFG)


def test_gap_leaving_table_reports_divergence_time():
    table = MagneticSpringModel.tabulated("stiff", [0.0, 0.01, 0.02], [6.0, 3.0, 1.0])
    plant = SpringPlant(kind="magnetic", model=table, gap_eq=0.01)
    with pytest.raises(IntegrationDivergenceError) as excinfo:
        pid_tracking_experiment(plant, 0.1, PidGains(), SineReference(amp=0.015, freq=2.0), PID_CFG)
    assert 0.0 <= excinfo.value.t < PID_CFG.t_end
    assert isinstance(excinfo.value.__cause__, GapRangeError)
