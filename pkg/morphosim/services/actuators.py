"""Tunable rotary joint and magnetic spring models"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from morphosim.core.errors import GapRangeError, IntegrationDivergenceError
from morphosim.core.integrator import integrate, step_rk4
from morphosim.core.timeseries import IntegratorConfig, TimeSeries
from morphosim.services.analysis import dominant_frequency, spectrum
from morphosim.utils.logging_config import get_logger

logger = get_logger(__name__)

ArrayLike = Union[float, np.ndarray]

# Finite-difference step for the series coefficients (rad)
SERIES_STEP = 1e-4
# Allowed relative mismatch between finite-difference and closed-form c1
C1_AGREEMENT = 1e-6


# ---------------------------------------------------------------------------
# Tunable rotary joint
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointGeometry:
    """Attachment radii of the joint's spring: inner r and outer d (m)"""
    r: float = 0.01
    d: float = 0.03

    def __post_init__(self):
        if not (self.d > self.r > 0):
            raise ValueError(f"joint geometry needs d > r > 0, got r={self.r}, d={self.d}")


@dataclass(frozen=True)
class SpringConfig:
    """Linear spring stiffness K (N/m) and pretension F (N)"""
    K: float = 200.0
    F: float = 1.0

    def __post_init__(self):
        if self.K < 0:
            raise ValueError(f"spring stiffness K must be >= 0, got {self.K}")
        if self.F < 0:
            raise ValueError(f"pretension F must be >= 0, got {self.F}")


@dataclass(frozen=True)
class SeriesCoefficients:
    """Odd Taylor coefficients of the joint torque about theta = 0"""
    c1: float
    c3: float


def torque_law(r: float, d: float, K: float, F: ArrayLike, theta: ArrayLike) -> ArrayLike:
    # Unchecked form for integrator loops; F and theta broadcast
    length = np.sqrt(r * r + d * d - 2.0 * np.cos(theta) * d * r)
    return ((length + r - d) * K + F) / length * d * r * np.sin(theta)


def joint_torque(g: JointGeometry, s: SpringConfig, theta: ArrayLike) -> ArrayLike:
    """
    Restoring torque of the joint deflected by ``theta``.

    Args:
        g: Joint geometry
        s: Spring stiffness and pretension
        theta: Deflection (rad), scalar or array within (-pi, pi]

    Returns:
        Torque (N*m), odd in theta
    """
    theta_arr = np.asarray(theta, dtype=float)
    if np.any((theta_arr > math.pi) | (theta_arr <= -math.pi)):
        raise ValueError("joint deflection must lie within (-pi, pi]")
    torque = torque_law(g.r, g.d, s.K, s.F, theta_arr)
    return float(torque) if np.ndim(torque) == 0 else torque


def joint_stiffness_closed_form(g: JointGeometry, s: SpringConfig) -> float:
    """Linear coefficient c1 = F*d*r/(d - r); independent of K."""
    return s.F * g.d * g.r / (g.d - g.r)


def joint_torque_series_closed_form(g: JointGeometry, s: SpringConfig) -> SeriesCoefficients:
    """Closed-form c1 and c3 of the torque expansion."""
    p = g.d * g.r
    D = g.d - g.r
    c3 = s.K * p * p / (2.0 * D * D) - s.F * p * p / (2.0 * D ** 3) - s.F * p / (6.0 * D)
    return SeriesCoefficients(c1=joint_stiffness_closed_form(g, s), c3=c3)


def joint_torque_series_coeffs(g: JointGeometry, s: SpringConfig) -> SeriesCoefficients:
    """
    Taylor coefficients of tau(theta) = c1*theta + c3*theta^3 + O(theta^5).

    Central differences at steps h and 2h, combined by Richardson
    extrapolation. The closed-form c1 is checked against the result.
    """
    h = SERIES_STEP
    offsets = np.array([1.0, 2.0, 4.0]) * h
    plus = torque_law(g.r, g.d, s.K, s.F, offsets)
    minus = torque_law(g.r, g.d, s.K, s.F, -offsets)
    f_h, f_2h, f_4h = plus
    m_h, m_2h, m_4h = minus

    def first(fp: float, fm: float, step: float) -> float:
        return (fp - fm) / (2.0 * step)

    def third(fp1: float, fp2: float, fm1: float, fm2: float, step: float) -> float:
        return (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * step ** 3)

    d1 = (4.0 * first(f_h, m_h, h) - first(f_2h, m_2h, 2.0 * h)) / 3.0
    d3 = (4.0 * third(f_h, f_2h, m_h, m_2h, h) - third(f_2h, f_4h, m_2h, m_4h, 2.0 * h)) / 3.0
    coeffs = SeriesCoefficients(c1=float(d1), c3=float(d3 / 6.0))

    closed = joint_stiffness_closed_form(g, s)
    scale = max(abs(closed), abs(coeffs.c1))
    if scale > 0 and abs(coeffs.c1 - closed) > C1_AGREEMENT * scale:
        logger.warning(
            f"⚠️ c1 mismatch: finite differences {coeffs.c1:.9e} vs closed form {closed:.9e}"
        )
    return coeffs


def linear_joint_frequency(g: JointGeometry, s: SpringConfig, inertia: float) -> float:
    """Small-angle natural frequency (Hz) from c1 and the joint inertia."""
    return math.sqrt(joint_stiffness_closed_form(g, s) / inertia) / (2.0 * math.pi)


@dataclass(frozen=True)
class PretensionSchedule:
    """
    Time course of the pretension applied to the joint spring.

    Modes:
        step: f_before until t_step, f_after from then on
        sine: f_mean + f_amp * sin(2*pi*f_mod*t)
    """
    K: float = 200.0
    mode: str = "step"
    f_before: float = 0.1
    f_after: float = 2.0
    t_step: float = 5.0
    f_mean: float = 1.0
    f_amp: float = 0.5
    f_mod: float = 5.0

    def __post_init__(self):
        if self.mode not in ("step", "sine"):
            raise ValueError(f"pretension mode must be 'step' or 'sine', got '{self.mode}'")
        if self.K < 0:
            raise ValueError(f"spring stiffness K must be >= 0, got {self.K}")
        if self.mode == "step" and (self.f_before < 0 or self.f_after < 0):
            raise ValueError("step pretensions must be >= 0")
        if self.mode == "sine" and (self.f_amp < 0 or self.f_mean - self.f_amp < 0 or self.f_mod <= 0):
            raise ValueError("sine pretension must stay >= 0 and have a positive modulation frequency")

    def pretension(self, t: ArrayLike) -> ArrayLike:
        if self.mode == "step":
            return np.where(np.asarray(t) < self.t_step, self.f_before, self.f_after) \
                if np.ndim(t) else (self.f_before if t < self.t_step else self.f_after)
        return self.f_mean + self.f_amp * np.sin(2.0 * np.pi * self.f_mod * np.asarray(t)) \
            if np.ndim(t) else self.f_mean + self.f_amp * math.sin(2.0 * math.pi * self.f_mod * t)

    def spring_at(self, t: float) -> SpringConfig:
        return SpringConfig(K=self.K, F=float(self.pretension(t)))


@dataclass(frozen=True)
class JointOscillatorConfig:
    """
    Rigid body on the tunable joint.

    Args:
        inertia: J (kg*m^2)
        damping: Viscous damping b (N*m*s/rad)
        theta0: Initial deflection (rad)
        theta_dot0: Initial angular velocity (rad/s)
    """
    inertia: float = 1e-4
    damping: float = 1e-5
    theta0: float = 0.02
    theta_dot0: float = 0.0

    def __post_init__(self):
        if self.inertia <= 0:
            raise ValueError(f"inertia must be positive, got {self.inertia}")
        if self.damping < 0:
            raise ValueError(f"damping must be >= 0, got {self.damping}")
        if not abs(self.theta0) < math.pi:
            raise ValueError(f"|theta0| must be below pi, got {self.theta0}")


def simulate_joint_oscillator(
    g: JointGeometry,
    schedule: PretensionSchedule,
    cfg: JointOscillatorConfig,
    icfg: IntegratorConfig,
) -> TimeSeries:
    """
    Integrate J*theta'' = -b*theta' - tau(theta; F(t)).

    Returns:
        TimeSeries with channels theta, theta_dot and the applied pretension F
    """
    if schedule.mode == "step" and not (0 < schedule.t_step < icfg.t_end):
        raise ValueError(f"t_step must lie within (0, {icfg.t_end}), got {schedule.t_step}")

    r, d, K = g.r, g.d, schedule.K
    inertia, damping = cfg.inertia, cfg.damping

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        theta, omega = y
        torque = torque_law(r, d, K, schedule.pretension(t), theta)
        return np.array([omega, (-damping * omega - torque) / inertia])

    logger.info(
        f"🧮 Joint oscillator: mode={schedule.mode}, J={inertia:g}, b={damping:g}, "
        f"theta0={cfg.theta0:g}, t_end={icfg.t_end:g}"
    )
    trace = integrate(rhs, [cfg.theta0, cfg.theta_dot0], icfg, channels=("theta", "theta_dot"))
    return trace.with_columns({"F": schedule.pretension(trace.times)})


@dataclass(frozen=True)
class StepFrequencyReport:
    """Dominant oscillation frequency before and after a pretension step (Hz)"""
    f_before: float
    f_after: float
    f_linear_before: float
    f_linear_after: float

    @property
    def ratio(self) -> float:
        return self.f_after / self.f_before


def step_frequency_report(
    trace: TimeSeries,
    g: JointGeometry,
    schedule: PretensionSchedule,
    cfg: JointOscillatorConfig,
    band: Tuple[float, float] = (0.05, 50.0),
) -> StepFrequencyReport:
    """Measure the frequency shift produced by a pretension step."""
    before = trace.window(trace.t0, schedule.t_step)
    after = trace.window(schedule.t_step, trace.t_end + trace.dt)
    f_before = dominant_frequency(spectrum(before, "theta", "hann"), band)
    f_after = dominant_frequency(spectrum(after, "theta", "hann"), band)
    report = StepFrequencyReport(
        f_before=f_before,
        f_after=f_after,
        f_linear_before=linear_joint_frequency(g, SpringConfig(schedule.K, schedule.f_before), cfg.inertia),
        f_linear_after=linear_joint_frequency(g, SpringConfig(schedule.K, schedule.f_after), cfg.inertia),
    )
    logger.info(
        f"✅ Pretension step: {report.f_before:.4f} Hz -> {report.f_after:.4f} Hz "
        f"(x{report.ratio:.2f}, linear prediction {report.f_linear_before:.4f} Hz before)"
    )
    return report


# ---------------------------------------------------------------------------
# Magnetic spring
# ---------------------------------------------------------------------------

MAGNET_MODES = ("stiff", "soft")


@dataclass(frozen=True)
class MagneticSpringModel:
    """
    Repulsive force between the magnets as a function of the gap.

    Parametric form: A / (gap + z_off)^4, valid for gap > -z_off.
    Tabulated form: monotone piecewise-linear interpolation of samples.
    """
    mode: str = "stiff"
    form: str = "parametric"
    A: float = 1e-6
    z_off: float = 0.01
    gaps: Tuple[float, ...] = field(default=(), repr=False)
    forces: Tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.mode not in MAGNET_MODES:
            raise ValueError(f"magnet mode must be one of {MAGNET_MODES}, got '{self.mode}'")
        if self.form == "parametric":
            if self.A <= 0 or self.z_off <= 0:
                raise ValueError(f"parametric magnet needs A > 0 and z_off > 0, got A={self.A}, z_off={self.z_off}")
        elif self.form == "tabulated":
            gaps = np.asarray(self.gaps, dtype=float)
            forces = np.asarray(self.forces, dtype=float)
            if gaps.size < 2 or gaps.size != forces.size:
                raise ValueError("tabulated magnet needs at least two (gap, force) samples")
            if np.any(np.diff(gaps) <= 0):
                raise ValueError("tabulated gaps must be strictly increasing")
            if np.any(np.diff(forces) >= 0):
                raise ValueError("tabulated forces must be strictly decreasing in gap")
            if np.any(forces < 0):
                raise ValueError("tabulated forces must be non-negative (repulsive)")
        else:
            raise ValueError(f"magnet form must be 'parametric' or 'tabulated', got '{self.form}'")

    @classmethod
    def tabulated(cls, mode: str, gaps, forces) -> "MagneticSpringModel":
        return cls(
            mode=mode,
            form="tabulated",
            gaps=tuple(float(v) for v in gaps),
            forces=tuple(float(v) for v in forces),
        )

    @property
    def gap_range(self) -> Tuple[float, float]:
        if self.form == "parametric":
            return -self.z_off, math.inf
        return self.gaps[0], self.gaps[-1]


def _check_gap(m: MagneticSpringModel, gap: np.ndarray):
    lo, hi = m.gap_range
    if m.form == "parametric":
        bad = gap <= lo
    else:
        bad = (gap < lo) | (gap > hi)
    if np.any(bad):
        worst = float(np.asarray(gap)[bad].flat[0])
        raise GapRangeError(f"gap {worst:.6g} m outside the {m.form} model range ({lo:.6g}, {hi:.6g})")


def magnetic_force(m: MagneticSpringModel, gap: ArrayLike) -> ArrayLike:
    """
    Repulsive magnet force (N) at ``gap`` (m).

    Raises:
        GapRangeError: gap outside the model range
    """
    gap_arr = np.asarray(gap, dtype=float)
    _check_gap(m, gap_arr)
    if m.form == "parametric":
        force = m.A / (gap_arr + m.z_off) ** 4
    else:
        force = np.interp(gap_arr, m.gaps, m.forces)
    return float(force) if np.ndim(force) == 0 else force


def magnetic_stiffness(m: MagneticSpringModel, gap: float) -> float:
    """Local stiffness -dF/dgap (N/m)."""
    _check_gap(m, np.asarray(gap, dtype=float))
    if m.form == "parametric":
        return 4.0 * m.A / (gap + m.z_off) ** 5
    gaps = np.asarray(m.gaps)
    forces = np.asarray(m.forces)
    i = int(np.clip(np.searchsorted(gaps, gap, side="right") - 1, 0, gaps.size - 2))
    return float(-(forces[i + 1] - forces[i]) / (gaps[i + 1] - gaps[i]))


def default_magnetic_pair(A_stiff: float = 1e-6, z_off: float = 0.01, soft_ratio: float = 0.6):
    """Stiff and soft parametric models sharing z_off."""
    if not (0 < soft_ratio <= 1):
        raise ValueError(f"soft_ratio must lie in (0, 1], got {soft_ratio}")
    stiff = MagneticSpringModel(mode="stiff", A=A_stiff, z_off=z_off)
    soft = MagneticSpringModel(mode="soft", A=A_stiff * soft_ratio, z_off=z_off)
    return stiff, soft


# ---------------------------------------------------------------------------
# PID tracking on a spring-loaded mass
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PidGains:
    """PID gains and the actuator force limit (N)"""
    kp: float = 2e4
    ki: float = 2e5
    kd: float = 60.0
    saturation: float = 50.0

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("PID gains must be >= 0")
        if self.saturation <= 0:
            raise ValueError(f"saturation must be positive, got {self.saturation}")


@dataclass(frozen=True)
class SpringPlant:
    """
    Mass held at ``gap_eq`` by a spring, pushed by the controller.

    kind "magnetic" uses the full magnet force about its equilibrium;
    kind "linear" uses ``k_lin`` (matched to the magnet at gap_eq when None).
    """
    kind: str = "magnetic"
    model: MagneticSpringModel = field(default_factory=MagneticSpringModel)
    gap_eq: float = 0.01
    damping: float = 1.0
    k_lin: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("linear", "magnetic"):
            raise ValueError(f"plant kind must be 'linear' or 'magnetic', got '{self.kind}'")
        if self.damping < 0:
            raise ValueError(f"plant damping must be >= 0, got {self.damping}")
        _check_gap(self.model, np.asarray(self.gap_eq))

    @property
    def stiffness(self) -> float:
        if self.k_lin is not None:
            return self.k_lin
        return magnetic_stiffness(self.model, self.gap_eq)


def matched_linear_plant(plant: SpringPlant) -> SpringPlant:
    """Linear plant with the magnet's local stiffness at the same equilibrium."""
    return SpringPlant(
        kind="linear",
        model=plant.model,
        gap_eq=plant.gap_eq,
        damping=plant.damping,
        k_lin=magnetic_stiffness(plant.model, plant.gap_eq),
    )


@dataclass(frozen=True)
class SineReference:
    """Position reference gap_eq + amp*sin(2*pi*freq*t)"""
    amp: float = 0.004
    freq: float = 2.0

    def __post_init__(self):
        if self.amp < 0 or self.freq <= 0:
            raise ValueError(f"reference needs amp >= 0 and freq > 0, got amp={self.amp}, freq={self.freq}")


@dataclass(frozen=True)
class TrackingReport:
    """RMS tracking error over the second half of the run and the trace"""
    rms_error: float
    trace: TimeSeries


def pid_tracking_experiment(
    plant: SpringPlant,
    mass: float,
    gains: PidGains,
    reference: SineReference,
    icfg: IntegratorConfig,
) -> TrackingReport:
    """
    Track a sinusoidal gap reference with a discrete PID.

    The command is held over each integrator step; the integral uses the
    trapezoidal rule and stops accumulating while the output saturates in the
    direction of the error; the derivative is a backward difference.

    Returns:
        TrackingReport with channels z, z_ref, u

    Raises:
        IntegrationDivergenceError: the gap leaves the magnet model range or the state blows up
    """
    if mass <= 0:
        raise ValueError(f"mass must be positive, got {mass}")

    gap_eq = plant.gap_eq
    damping = plant.damping
    if plant.kind == "linear":
        k_lin = plant.stiffness

        def spring_force(z: float) -> float:
            return -k_lin * (z - gap_eq)
    else:
        model = plant.model
        preload = magnetic_force(model, gap_eq)

        def spring_force(z: float) -> float:
            return magnetic_force(model, z) - preload

    omega_ref = 2.0 * math.pi * reference.freq

    def z_ref(t: float) -> float:
        return gap_eq + reference.amp * math.sin(omega_ref * t)

    dt = icfg.dt
    stride = int(icfg.record_stride)
    n_steps = icfg.n_recorded_steps
    rows = n_steps // stride + 1
    recorded = np.empty((rows, 3))

    y = np.array([gap_eq, 0.0])
    integral = 0.0
    error_prev = 0.0
    u = 0.0

    logger.info(
        f"🧮 PID tracking on {plant.kind} plant: amp={reference.amp:g} m, "
        f"freq={reference.freq:g} Hz, kp={gains.kp:g}, ki={gains.ki:g}, kd={gains.kd:g}"
    )

    row = 0
    for k in range(n_steps + 1):
        t = k * dt
        target = z_ref(t)
        error = target - y[0]
        derivative = (error - error_prev) / dt if k > 0 else 0.0
        candidate = integral + 0.5 * (error + error_prev) * dt if k > 0 else integral
        u_raw = gains.kp * error + gains.ki * candidate + gains.kd * derivative
        if abs(u_raw) > gains.saturation and error * u_raw > 0:
            u_raw = gains.kp * error + gains.ki * integral + gains.kd * derivative
        else:
            integral = candidate
        u = max(-gains.saturation, min(gains.saturation, u_raw))
        error_prev = error

        if k % stride == 0:
            recorded[row] = (y[0], target, u)
            row += 1
        if k == n_steps:
            break

        command = u

        def rhs(_t: float, state: np.ndarray) -> np.ndarray:
            z, z_dot = state
            return np.array([z_dot, (spring_force(z) - damping * z_dot + command) / mass])

        try:
            y = step_rk4(rhs, y, t, dt)
        except GapRangeError as e:
            raise IntegrationDivergenceError(t, y, step=k) from e
        if not np.all(np.isfinite(y)):
            raise IntegrationDivergenceError(t + dt, y, step=k + 1)

    trace = TimeSeries(
        t0=0.0,
        dt=dt * stride,
        channels=("z", "z_ref", "u"),
        samples=recorded[:row],
    )
    half = trace.window(trace.t0 + 0.5 * (trace.t_end - trace.t0), trace.t_end + trace.dt)
    tracking_error = half.column("z_ref") - half.column("z")
    rms = float(np.sqrt(np.mean(tracking_error ** 2)))
    logger.info(f"✅ PID on {plant.kind} plant: rms error {rms:.6e} m")
    return TrackingReport(rms_error=rms, trace=trace)
