"""Planar five-segment swimmer and its stiffness optimizer"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from morphosim.core.errors import AllRestartsDivergedError, IntegrationDivergenceError, MorphosimError
from morphosim.core.integrator import integrate
from morphosim.core.timeseries import IntegratorConfig, TimeSeries
from morphosim.services.actuators import JointGeometry, torque_law
from morphosim.utils.logging_config import get_logger
from morphosim.utils.parallel import ordered_map

logger = get_logger(__name__)

N_SEGMENTS = 5
N_JOINTS = N_SEGMENTS - 1
MIN_PERIODS = 10
# Objective value reported to the optimizer for a diverged simulation
DIVERGED_PENALTY = 1e9

STATE_CHANNELS = (
    ("x", "y")
    + tuple(f"theta{i}" for i in range(N_SEGMENTS))
    + ("vx", "vy")
    + tuple(f"omega{i}" for i in range(N_SEGMENTS))
)
POSE_CHANNELS = ("head_x", "head_y", "heading") + tuple(f"joint{j}" for j in range(1, N_JOINTS + 1))

Profile = Tuple[float, ...]


@dataclass(frozen=True)
class SwimmerConfig:
    """
    Body, fluid and joint settings of the swimmer.

    Segment 0 is the front segment; joint j links segment j-1 to segment j.
    Joint 1 carries the motor in series with its compliant element.

    Args:
        lengths: Segment lengths (m), front first
        mass_per_length: Mass per metre at unit depth (kg/m)
        c_normal: Normal drag per unit length (N*s/m^2)
        c_tangential: Tangential drag per unit length (N*s/m^2)
        joint_damping: Viscous damping of every joint (N*m*s/rad)
        k_min: Lower stiffness bound (N*m/rad)
        k_max: Upper stiffness bound (N*m/rad)
        passive_law: "linear" torsional springs or the "tunable" joint torque law
        joint_geometry: Geometry used by the tunable law
        spring_K: Spring stiffness used by the tunable law (N/m)
    """
    lengths: Tuple[float, ...] = (0.20, 0.05, 0.05, 0.05, 0.05)
    mass_per_length: float = 1.0
    c_normal: float = 5.0
    c_tangential: float = 1.0
    joint_damping: float = 1e-4
    k_min: float = 0.005
    k_max: float = 0.5
    passive_law: str = "linear"
    joint_geometry: JointGeometry = field(default_factory=JointGeometry)
    spring_K: float = 200.0

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) != N_SEGMENTS:
            raise ValueError(f"swimmer needs {N_SEGMENTS} segment lengths, got {len(lengths)}")
        if min(lengths) <= 0:
            raise ValueError("segment lengths must be positive")
        if abs(lengths[0] - sum(lengths[1:])) > 1e-9 * lengths[0]:
            raise ValueError(
                f"front segment length {lengths[0]} must equal the rear total {sum(lengths[1:])}"
            )
        if self.mass_per_length <= 0:
            raise ValueError(f"mass_per_length must be positive, got {self.mass_per_length}")
        if not (self.c_normal > self.c_tangential > 0):
            raise ValueError(
                f"need c_normal > c_tangential > 0, got {self.c_normal}, {self.c_tangential}"
            )
        if self.joint_damping < 0:
            raise ValueError(f"joint_damping must be >= 0, got {self.joint_damping}")
        if not (0 < self.k_min < self.k_max):
            raise ValueError(f"need 0 < k_min < k_max, got {self.k_min}, {self.k_max}")
        if self.passive_law not in ("linear", "tunable"):
            raise ValueError(f"passive_law must be 'linear' or 'tunable', got '{self.passive_law}'")
        if self.spring_K < 0:
            raise ValueError(f"spring_K must be >= 0, got {self.spring_K}")

    @property
    def masses(self) -> np.ndarray:
        return self.mass_per_length * np.array(self.lengths)

    @property
    def inertias(self) -> np.ndarray:
        lengths = np.array(self.lengths)
        return self.masses * lengths ** 2 / 12.0

    def pretension_for(self, k: float) -> float:
        """Pretension that gives the tunable joint a linear stiffness of ``k``."""
        g = self.joint_geometry
        return k * (g.d - g.r) / (g.d * g.r)


@dataclass(frozen=True)
class StiffnessProfile:
    """Stiffness of the four compliant joints (N*m/rad), joint 1 first"""
    k: Tuple[float, ...]

    def __post_init__(self):
        k = tuple(float(v) for v in self.k)
        object.__setattr__(self, "k", k)
        if len(k) != N_JOINTS:
            raise ValueError(f"stiffness profile needs {N_JOINTS} entries, got {len(k)}")
        if min(k) <= 0:
            raise ValueError("joint stiffness must be positive")

    @classmethod
    def homogeneous(cls, k: float) -> "StiffnessProfile":
        return cls(k=(k,) * N_JOINTS)

    def check_box(self, cfg: SwimmerConfig):
        for j, k in enumerate(self.k, start=1):
            if not (cfg.k_min <= k <= cfg.k_max):
                raise ValueError(f"joint {j} stiffness {k} outside [{cfg.k_min}, {cfg.k_max}]")


@dataclass(frozen=True)
class ActuationParams:
    """Motor angle amplitude (rad), frequency (Hz) and phase (rad)"""
    amplitude: float = 0.3
    frequency: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if not (0 <= self.amplitude < math.pi / 2):
            raise ValueError(f"amplitude must lie in [0, pi/2), got {self.amplitude}")
        if self.frequency <= 0:
            raise ValueError(f"frequency must be positive, got {self.frequency}")

    def motor(self, t: float) -> Tuple[float, float]:
        """Motor angle and its rate at ``t``."""
        w = 2.0 * math.pi * self.frequency
        arg = w * t + self.phase
        return self.amplitude * math.sin(arg), self.amplitude * w * math.cos(arg)


@dataclass(frozen=True)
class GaitMetrics:
    """Steady-gait summary over the last half of a run"""
    speed: float
    thrust: float
    power: float


@dataclass(frozen=True)
class SwimResult:
    """Pose trace, full state trace and the gait metrics of one run"""
    trace: TimeSeries
    states: TimeSeries
    metrics: GaitMetrics


@dataclass(frozen=True)
class SwimmerEnergy:
    kinetic: float
    elastic: float

    @property
    def total(self) -> float:
        return self.kinetic + self.elastic


def _chain_matrix(lengths: Sequence[float]) -> np.ndarray:
    """Constant coefficients mapping segment directions to segment centres."""
    A = np.zeros((N_SEGMENTS, N_SEGMENTS))
    for i in range(1, N_SEGMENTS):
        A[i, 0] = -0.5 * lengths[0]
        for j in range(1, i):
            A[i, j] = -lengths[j]
        A[i, i] = -0.5 * lengths[i]
    return A


class ChainDynamics:
    """
    Equations of motion of the segment chain in resistive drag.

    Generalized coordinates are the front-segment centre (x, y) and the five
    absolute segment angles.
    """

    def __init__(self, cfg: SwimmerConfig, profile: StiffnessProfile, act: ActuationParams):
        self.cfg = cfg
        self.act = act
        self.A = _chain_matrix(cfg.lengths)
        self.masses = cfg.masses
        self.inertias = cfg.inertias
        lengths = np.array(cfg.lengths)
        self.lengths = lengths
        self.drag_t = cfg.c_tangential * lengths
        self.drag_n = cfg.c_normal * lengths
        self.drag_rot = cfg.c_normal * lengths ** 3 / 12.0
        self.k = np.array(profile.k)
        self.damping = cfg.joint_damping
        self.tunable = cfg.passive_law == "tunable"
        self.pretensions = np.array([cfg.pretension_for(k) for k in profile.k])
        self._rot = np.arange(2, 2 + N_SEGMENTS)

    def jacobians(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        jx = np.zeros((N_SEGMENTS, 2 + N_SEGMENTS))
        jy = np.zeros((N_SEGMENTS, 2 + N_SEGMENTS))
        jx[:, 0] = 1.0
        jy[:, 1] = 1.0
        jx[:, 2:] = -self.A * np.sin(theta)
        jy[:, 2:] = self.A * np.cos(theta)
        return jx, jy

    def mass_matrix(self, jx: np.ndarray, jy: np.ndarray) -> np.ndarray:
        m = self.masses[:, None]
        M = jx.T @ (m * jx) + jy.T @ (m * jy)
        M[self._rot, self._rot] += self.inertias
        return M

    def rest_angles(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        rest = np.zeros(N_JOINTS)
        rate = np.zeros(N_JOINTS)
        rest[0], rate[0] = self.act.motor(t)
        return rest, rate

    def spring_torques(self, deflection: np.ndarray) -> np.ndarray:
        if self.tunable:
            g = self.cfg.joint_geometry
            return -torque_law(g.r, g.d, self.cfg.spring_K, self.pretensions, deflection)
        return -self.k * deflection

    def elastic_energy(self, deflection: np.ndarray) -> float:
        if self.tunable:
            g = self.cfg.joint_geometry
            rest_length = g.d - g.r
            length = np.sqrt(g.r ** 2 + g.d ** 2 - 2.0 * g.d * g.r * np.cos(deflection))
            stretch = length - rest_length
            return float(np.sum(0.5 * self.cfg.spring_K * stretch ** 2 + self.pretensions * stretch))
        return float(np.sum(0.5 * self.k * deflection ** 2))

    def joint_torques(self, t: float, theta: np.ndarray, theta_dot: np.ndarray) -> np.ndarray:
        rest, rate = self.rest_angles(t)
        q = np.diff(theta)
        q_dot = np.diff(theta_dot)
        return self.spring_torques(q - rest) - self.damping * (q_dot - rate)

    def __call__(self, t: float, state: np.ndarray) -> np.ndarray:
        theta = state[2:7]
        vel = state[7:]
        theta_dot = vel[2:]
        sin_t = np.sin(theta)
        cos_t = np.cos(theta)
        jx, jy = self.jacobians(theta)

        cx = jx @ vel
        cy = jy @ vel
        v_tan = cx * cos_t + cy * sin_t
        v_nor = -cx * sin_t + cy * cos_t
        fx = -self.drag_t * v_tan * cos_t + self.drag_n * v_nor * sin_t
        fy = -self.drag_t * v_tan * sin_t - self.drag_n * v_nor * cos_t

        # Velocity-dependent part of the centre accelerations
        w_sq = theta_dot * theta_dot
        bx = -self.A @ (cos_t * w_sq)
        by = -self.A @ (sin_t * w_sq)

        Q = jx.T @ (fx - self.masses * bx) + jy.T @ (fy - self.masses * by)
        Q[2:] -= self.drag_rot * theta_dot
        tau = self.joint_torques(t, theta, theta_dot)
        Q[3:] += tau
        Q[2:6] -= tau

        acc = np.linalg.solve(self.mass_matrix(jx, jy), Q)
        return np.concatenate((vel, acc))

    def centres(self, state: np.ndarray) -> np.ndarray:
        """Segment centres (5 x 2) of one state vector."""
        theta = state[2:7]
        dirs = np.column_stack((np.cos(theta), np.sin(theta)))
        return state[0:2] + self.A @ dirs

    def centre_of_mass(self, state: np.ndarray) -> np.ndarray:
        return self.masses @ self.centres(state) / np.sum(self.masses)


def initial_state(
    cfg: SwimmerConfig,
    heading0: float = 0.0,
    velocity0: Sequence[float] = (0.0, 0.0),
    joint_angles0: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Chain at rest (or translating) with the front centre at the origin."""
    joints = np.zeros(N_JOINTS) if joint_angles0 is None else np.asarray(joint_angles0, dtype=float)
    if joints.shape != (N_JOINTS,):
        raise ValueError(f"joint_angles0 needs {N_JOINTS} entries")
    theta = heading0 + np.concatenate(([0.0], np.cumsum(joints)))
    state = np.zeros(2 * (2 + N_SEGMENTS))
    state[2:7] = theta
    state[7:9] = velocity0
    return state


def _pose_trace(dyn: ChainDynamics, states: TimeSeries) -> TimeSeries:
    samples = states.samples
    theta = samples[:, 2:7]
    head = samples[:, 0:2] + 0.5 * dyn.lengths[0] * np.column_stack((np.cos(theta[:, 0]), np.sin(theta[:, 0])))
    joints = np.diff(theta, axis=1)
    columns = {"head_x": head[:, 0], "head_y": head[:, 1], "heading": theta[:, 0]}
    for j in range(N_JOINTS):
        columns[f"joint{j + 1}"] = joints[:, j]
    return TimeSeries.from_columns(states.t0, states.dt, columns)


def _gait_metrics(dyn: ChainDynamics, states: TimeSeries, heading0: float) -> GaitMetrics:
    t_half = states.t0 + 0.5 * (states.t_end - states.t0)
    tail = states.window(t_half, states.t_end + states.dt)
    first = tail.samples[0]
    last = tail.samples[-1]
    elapsed = tail.t_end - tail.t0
    forward = np.array([math.cos(heading0), math.sin(heading0)])
    if elapsed > 0:
        speed = float((dyn.centre_of_mass(last) - dyn.centre_of_mass(first)) @ forward / elapsed)
    else:
        speed = 0.0

    powers = []
    for t, row in zip(tail.times, tail.samples):
        torque = dyn.joint_torques(t, row[2:7], row[9:14])[0]
        powers.append(torque * dyn.act.motor(t)[1])
    return GaitMetrics(speed=speed, thrust=speed, power=float(np.mean(powers)))


def simulate_swimmer(
    cfg: SwimmerConfig,
    profile: StiffnessProfile,
    act: ActuationParams,
    duration: float,
    icfg: IntegratorConfig,
    heading0: float = 0.0,
    velocity0: Sequence[float] = (0.0, 0.0),
    joint_angles0: Optional[Sequence[float]] = None,
) -> SwimResult:
    """
    Integrate the swimmer for ``duration`` seconds.

    Args:
        cfg: Body and fluid settings
        profile: Joint stiffnesses inside the configured box
        act: Motor angle of joint 1
        duration: Run length (s), at least ten actuation periods
        icfg: Step size and recording stride (its t_end is replaced by duration)
        heading0: Initial heading of the straight chain (rad)
        velocity0: Initial translation velocity (m/s)
        joint_angles0: Initial joint deflections (rad)

    Returns:
        SwimResult with the pose trace, the full state trace and GaitMetrics

    Raises:
        IntegrationDivergenceError: if the chain blows up
    """
    profile.check_box(cfg)
    min_duration = MIN_PERIODS / act.frequency
    if duration < min_duration * (1.0 - 1e-12):
        raise ValueError(
            f"duration {duration} s is shorter than {MIN_PERIODS} actuation periods ({min_duration:g} s)"
        )
    run_cfg = IntegratorConfig(dt=icfg.dt, t_end=duration, record_stride=icfg.record_stride)
    dyn = ChainDynamics(cfg, profile, act)
    y0 = initial_state(cfg, heading0, velocity0, joint_angles0)
    states = integrate(dyn, y0, run_cfg, channels=STATE_CHANNELS)
    metrics = _gait_metrics(dyn, states, heading0)
    logger.debug(
        f"🧮 Swim k={[f'{k:.4g}' for k in profile.k]}, amp={act.amplitude:g}, "
        f"f={act.frequency:g} Hz -> speed={metrics.speed:.6e} m/s"
    )
    return SwimResult(trace=_pose_trace(dyn, states), states=states, metrics=metrics)


def swimmer_energy(
    cfg: SwimmerConfig,
    profile: StiffnessProfile,
    state: Sequence[float],
    act: Optional[ActuationParams] = None,
    t: float = 0.0,
) -> SwimmerEnergy:
    """Kinetic and elastic energy of one state (motor at rest when ``act`` is None)."""
    y = np.asarray(state, dtype=float)
    dyn = ChainDynamics(cfg, profile, act or ActuationParams(amplitude=0.0))
    theta = y[2:7]
    vel = y[7:]
    jx, jy = dyn.jacobians(theta)
    kinetic = 0.5 * float(vel @ dyn.mass_matrix(jx, jy) @ vel)
    rest, _ = dyn.rest_angles(t)
    return SwimmerEnergy(kinetic=kinetic, elastic=dyn.elastic_energy(np.diff(theta) - rest))


# ---------------------------------------------------------------------------
# Homogeneous oracle and stiffness optimizer
# ---------------------------------------------------------------------------

Objective = Callable[[Profile], float]


@dataclass(frozen=True)
class SwimObjective:
    """Thrust of a stiffness profile under fixed body, actuation and horizon"""
    cfg: SwimmerConfig
    act: ActuationParams
    duration: float
    icfg: IntegratorConfig

    def __call__(self, k: Profile) -> float:
        result = simulate_swimmer(self.cfg, StiffnessProfile(k), self.act, self.duration, self.icfg)
        return result.metrics.thrust


@dataclass(frozen=True)
class OracleCell:
    k: float
    thrust: float
    diverged: bool = False


@dataclass(frozen=True)
class OracleResult:
    """Best homogeneous stiffness and the full evaluated table"""
    k_best: float
    metric_best: float
    table: Tuple[OracleCell, ...]


def default_k_grid(cfg: SwimmerConfig, size: int = 12) -> List[float]:
    """Log-spaced stiffness grid spanning the configured box."""
    if size < 1:
        raise ValueError(f"grid size must be >= 1, got {size}")
    grid = np.clip(np.logspace(math.log10(cfg.k_min), math.log10(cfg.k_max), size), cfg.k_min, cfg.k_max)
    grid[0] = cfg.k_min
    if size > 1:
        grid[-1] = cfg.k_max
    return [float(k) for k in grid]


def _oracle_cell(job: Tuple[float, Objective]) -> OracleCell:
    k, objective = job
    try:
        thrust = float(objective((k,) * N_JOINTS))
    except IntegrationDivergenceError as e:
        logger.warning(f"⚠️ [SWEEP] homogeneous k={k:.4g} diverged: {e}")
        return OracleCell(k=k, thrust=math.nan, diverged=True)
    logger.info(f"🔁 [SWEEP] homogeneous k={k:.4g} -> thrust={thrust:.6e}")
    return OracleCell(k=k, thrust=thrust)


def homogeneous_oracle(
    cfg: SwimmerConfig,
    act: ActuationParams,
    k_grid: Sequence[float],
    duration: float,
    icfg: IntegratorConfig,
    objective: Optional[Objective] = None,
    workers: Optional[int] = None,
) -> OracleResult:
    """
    Evaluate every homogeneous profile on ``k_grid`` and keep the best.

    Diverged cells stay in the table with NaN thrust.
    """
    grid = [float(k) for k in k_grid]
    if not grid:
        raise ValueError("homogeneous oracle needs a non-empty k grid")
    for k in grid:
        if not (cfg.k_min <= k <= cfg.k_max):
            raise ValueError(f"grid stiffness {k} outside [{cfg.k_min}, {cfg.k_max}]")

    fn = objective or SwimObjective(cfg, act, duration, icfg)
    logger.info(f"🔁 [SWEEP] Homogeneous oracle over {len(grid)} stiffness values")
    cells = tuple(ordered_map(_oracle_cell, [(k, fn) for k in grid], workers))
    valid = [i for i, cell in enumerate(cells) if not cell.diverged]
    if not valid:
        raise MorphosimError("every homogeneous oracle cell diverged")
    best = max(valid, key=lambda i: cells[i].thrust)
    if len(grid) > 1 and best in (0, len(grid) - 1):
        logger.warning(
            f"⚠️ [SWEEP] Oracle maximum at the grid edge k={grid[best]:.4g}; consider widening the grid"
        )
    logger.info(f"✅ [SWEEP] Oracle best k={cells[best].k:.4g}, thrust={cells[best].thrust:.6e}")
    return OracleResult(k_best=cells[best].k, metric_best=cells[best].thrust, table=cells)


@dataclass(frozen=True)
class OptimizerSettings:
    """
    Multi-start Nelder-Mead over log10 stiffness.

    Args:
        method: Only "nelder-mead"
        restarts: Number of starts; the first starts at the oracle best
        seed: Seed for the random starts
        max_evaluations: Objective evaluations per restart
        xatol: Simplex size tolerance in log10 units
        fatol: Objective tolerance
    """
    method: str = "nelder-mead"
    restarts: int = 5
    seed: int = 0
    max_evaluations: int = 40
    xatol: float = 1e-4
    fatol: float = 1e-9

    def __post_init__(self):
        if self.method != "nelder-mead":
            raise ValueError(f"unsupported optimizer method '{self.method}'")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_evaluations < 1:
            raise ValueError(f"max_evaluations must be >= 1, got {self.max_evaluations}")


@dataclass(frozen=True)
class Evaluation:
    restart: int
    evaluation: int
    k: Profile
    thrust: float
    diverged: bool = False


@dataclass(frozen=True)
class OptimizationResult:
    profile_best: StiffnessProfile
    metric_best: float
    history: Tuple[Evaluation, ...]
    oracle: OracleResult

    @property
    def improvement(self) -> float:
        return self.metric_best - self.oracle.metric_best


RestartJob = Tuple[int, np.ndarray, Objective, Tuple[float, float], OptimizerSettings]


def _to_stiffness(z: np.ndarray, k_min: float, k_max: float) -> Profile:
    """Map log10 coordinates back into the closed stiffness box."""
    return tuple(min(max(float(10.0 ** v), k_min), k_max) for v in z)


def _run_restart(job: RestartJob) -> List[Evaluation]:
    restart, start, objective, (k_min, k_max), opt = job
    lo, hi = math.log10(k_min), math.log10(k_max)
    history: List[Evaluation] = []

    def negative_thrust(z: np.ndarray) -> float:
        k = _to_stiffness(z, k_min, k_max)
        index = len(history) + 1
        try:
            thrust = float(objective(k))
        except IntegrationDivergenceError as e:
            logger.warning(f"⚠️ [OPTIMIZER] restart {restart} evaluation {index} diverged: {e}")
            history.append(Evaluation(restart, index, k, math.nan, diverged=True))
            return DIVERGED_PENALTY
        history.append(Evaluation(restart, index, k, thrust))
        logger.debug(f"[OPTIMIZER] restart {restart} evaluation {index}: thrust={thrust:.6e}")
        return -thrust

    minimize(
        negative_thrust,
        start,
        method="Nelder-Mead",
        bounds=[(lo, hi)] * N_JOINTS,
        options={
            "maxfev": opt.max_evaluations,
            "xatol": opt.xatol,
            "fatol": opt.fatol,
            "initial_simplex": _initial_simplex(start, lo, hi),
        },
    )
    return history


def _initial_simplex(start: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Simplex around ``start`` with edges of a tenth of the box, kept inside it."""
    step = 0.1 * (hi - lo)
    simplex = np.tile(start, (N_JOINTS + 1, 1))
    for j in range(N_JOINTS):
        shifted = start[j] + step
        simplex[j + 1, j] = shifted if shifted <= hi else start[j] - step
    return simplex


def optimize_stiffness(
    cfg: SwimmerConfig,
    act: ActuationParams,
    opt: OptimizerSettings,
    duration: float,
    icfg: IntegratorConfig,
    k_grid: Optional[Sequence[float]] = None,
    objective: Optional[Objective] = None,
    workers: Optional[int] = None,
) -> OptimizationResult:
    """
    Search the four-joint stiffness box for the highest thrust.

    The homogeneous oracle runs first; restart 0 starts at its best profile
    and the incumbent is only replaced by a strictly better evaluation, so the
    result never falls below the oracle.

    Raises:
        AllRestartsDivergedError: every evaluation of every restart diverged
    """
    fn = objective or SwimObjective(cfg, act, duration, icfg)
    grid = list(k_grid) if k_grid is not None else default_k_grid(cfg)
    oracle = homogeneous_oracle(cfg, act, grid, duration, icfg, objective=fn, workers=workers)

    lo = math.log10(cfg.k_min)
    hi = math.log10(cfg.k_max)
    rng = np.random.default_rng(opt.seed)
    starts = [np.full(N_JOINTS, math.log10(oracle.k_best))]
    starts += [rng.uniform(lo, hi, N_JOINTS) for _ in range(opt.restarts - 1)]

    logger.info(
        f"🔁 [OPTIMIZER] {opt.restarts} restart(s), seed={opt.seed}, "
        f"oracle best thrust={oracle.metric_best:.6e}"
    )
    jobs = [(i, s, fn, (cfg.k_min, cfg.k_max), opt) for i, s in enumerate(starts)]
    runs = ordered_map(_run_restart, jobs, workers)

    history = tuple(e for run in runs for e in run)
    if all(e.diverged for e in history):
        raise AllRestartsDivergedError(f"all {opt.restarts} optimizer restarts diverged")

    best_k: Profile = (min(max(oracle.k_best, cfg.k_min), cfg.k_max),) * N_JOINTS
    best_thrust = oracle.metric_best
    for e in history:
        if not e.diverged and e.thrust > best_thrust:
            best_k, best_thrust = e.k, e.thrust

    logger.info(
        f"✅ [OPTIMIZER] best thrust={best_thrust:.6e} "
        f"(oracle {oracle.metric_best:.6e}), k={[f'{k:.4g}' for k in best_k]}"
    )
    return OptimizationResult(
        profile_best=StiffnessProfile(best_k),
        metric_best=best_thrust,
        history=history,
        oracle=oracle,
    )


@dataclass(frozen=True)
class ActuationMapCell:
    freq_hz: float
    amplitude: float
    k_best: float
    thrust: float


def actuation_map(
    cfg: SwimmerConfig,
    freqs: Sequence[float],
    amps: Sequence[float],
    k_grid: Sequence[float],
    icfg: IntegratorConfig,
    duration: Optional[float] = None,
    workers: Optional[int] = None,
) -> List[ActuationMapCell]:
    """
    Best homogeneous stiffness for every actuation frequency and amplitude.

    Each cell runs for ``duration`` or ten actuation periods, whichever is longer.
    """
    if not freqs or not amps:
        raise ValueError("actuation map needs at least one frequency and one amplitude")
    cells: List[ActuationMapCell] = []
    for f in freqs:
        run_for = max(duration or 0.0, MIN_PERIODS / f)
        for a in amps:
            act = ActuationParams(amplitude=a, frequency=f)
            logger.info(f"🔁 [SWEEP] Actuation map cell f={f:g} Hz, amplitude={a:g} rad")
            oracle = homogeneous_oracle(cfg, act, k_grid, run_for, icfg, workers=workers)
            cells.append(ActuationMapCell(f, a, oracle.k_best, oracle.metric_best))
    return cells
