"""Subcommand handlers: one experiment per command"""

import argparse
import math
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from morphosim.core.errors import MorphosimError
from morphosim.core.timeseries import IntegratorConfig
from morphosim.handlers.router import RunContext, Router, opt
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
    joint_torque,
    joint_torque_series_closed_form,
    joint_torque_series_coeffs,
    magnetic_force,
    matched_linear_plant,
    pid_tracking_experiment,
    simulate_joint_oscillator,
    step_frequency_report,
)
from morphosim.services.afo import (
    AfoParams,
    DuffingParams,
    PlantState,
    basin_sweep,
    energy_transfer_experiment,
    run_coupled_loop,
    run_forced_reference,
)
from morphosim.services.analysis import (
    amplitude_envelope,
    dominant_frequency,
    envelope_at,
    harmonic_ratios,
    spectrum,
)
from morphosim.services.swimmer import (
    ActuationParams,
    OptimizerSettings,
    StiffnessProfile,
    SwimmerConfig,
    actuation_map,
    default_k_grid,
    optimize_stiffness,
    simulate_swimmer,
)
from morphosim.storage.models import RunManifest
from morphosim.storage.operations import (
    load_magnet_table,
    read_trace_csv,
    write_manifest,
    write_summary,
    write_table_csv,
    write_trace_csv,
)
from morphosim.utils.logging_config import get_logger, setup_logging

logger = get_logger(__name__)

router = Router()

MANIFEST_NAME = "run_manifest.txt"
SUMMARY_NAME = "summary.txt"


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def emit_summary(ctx: RunContext, items: Dict[str, object]):
    """Write summary.txt and echo it to stdout."""
    lines = write_summary(ctx.path(SUMMARY_NAME), {key: _fmt(value) for key, value in items.items()})
    for line in lines:
        print(line)


def _integrator(args: argparse.Namespace) -> IntegratorConfig:
    return IntegratorConfig(dt=args.dt, t_end=args.t_end, record_stride=args.stride)


def _integration_options(dt: float, t_end: float, stride: int = 10):
    return [
        opt("--dt", dt, "Integrator step (s)"),
        opt("--t-end", t_end, "Integration horizon (s)"),
        opt("--stride", stride, "Record every k-th step"),
    ]


# ---------------------------------------------------------------------------
# Tunable joint
# ---------------------------------------------------------------------------

JOINT_OPTIONS = [
    opt("--r", 0.01, "Inner attachment radius (m)"),
    opt("--d", 0.03, "Outer attachment distance (m)"),
    opt("--K", 200.0, "Spring stiffness (N/m)"),
    opt("--F", 1.0, "Pretension (N)"),
]


@router.command(
    "joint-torque",
    "Torque of the tunable joint versus deflection, with its cubic expansion",
    JOINT_OPTIONS + [
        opt("--theta-max", 0.5, "Largest deflection (rad)"),
        opt("--points", 201, "Number of deflections"),
    ],
)
def cmd_joint_torque(args: argparse.Namespace, ctx: RunContext):
    """Handle joint-torque"""
    if not (0 < args.theta_max <= math.pi) or args.points < 2:
        raise ValueError("need 0 < theta-max <= pi and at least two points")
    g = JointGeometry(args.r, args.d)
    s = SpringConfig(args.K, args.F)
    theta = np.linspace(-args.theta_max, args.theta_max, args.points)
    torque = joint_torque(g, s, theta)
    coeffs = joint_torque_series_coeffs(g, s)
    series = coeffs.c1 * theta + coeffs.c3 * theta ** 3
    write_table_csv(ctx.path("joint_torque.csv"), ["theta", "torque", "series"], np.column_stack([theta, torque, series]))

    near = np.abs(theta) <= min(0.2, args.theta_max)
    nonzero = near & (torque != 0)
    rel = np.abs(torque[nonzero] - series[nonzero]) / np.abs(torque[nonzero]) if np.any(nonzero) else np.zeros(1)
    emit_summary(ctx, {
        "c1": coeffs.c1,
        "c3": coeffs.c3,
        "max_series_rel_error_within_0.2rad": float(np.max(rel)),
    })


@router.command("joint-coeffs", "Linear and cubic torque coefficients of the joint", JOINT_OPTIONS)
def cmd_joint_coeffs(args: argparse.Namespace, ctx: RunContext):
    """Handle joint-coeffs"""
    g = JointGeometry(args.r, args.d)
    s = SpringConfig(args.K, args.F)
    numeric = joint_torque_series_coeffs(g, s)
    closed = joint_torque_series_closed_form(g, s)
    emit_summary(ctx, {
        "c1": numeric.c1,
        "c3": numeric.c3,
        "c1_closed_form": closed.c1,
        "c3_closed_form": closed.c3,
    })


@router.command(
    "joint-step",
    "Joint oscillation under a pretension step (or a sinusoidal pretension)",
    [
        opt("--r", 0.01, "Inner attachment radius (m)"),
        opt("--d", 0.03, "Outer attachment distance (m)"),
        opt("--K", 200.0, "Spring stiffness (N/m)"),
        opt("--mode", "step", "Pretension schedule", choices=["step", "sine"]),
        opt("--f-before", 0.1, "Pretension before the step (N)"),
        opt("--f-after", 2.0, "Pretension after the step (N)"),
        opt("--t-step", 5.0, "Step time (s)"),
        opt("--f-mean", 1.0, "Mean pretension in sine mode (N)"),
        opt("--f-amp", 0.5, "Pretension swing in sine mode (N)"),
        opt("--f-mod", 5.0, "Pretension modulation frequency in sine mode (Hz)"),
        opt("--inertia", 1e-4, "Joint inertia (kg*m^2)"),
        opt("--damping", 1e-5, "Joint viscous damping (N*m*s/rad)"),
        opt("--theta0", 0.02, "Initial deflection (rad)"),
        opt("--harmonics", 5, "Highest harmonic reported in sine mode"),
    ] + _integration_options(1e-4, 10.0),
)
def cmd_joint_step(args: argparse.Namespace, ctx: RunContext):
    """Handle joint-step"""
    g = JointGeometry(args.r, args.d)
    schedule = PretensionSchedule(
        K=args.K, mode=args.mode, f_before=args.f_before, f_after=args.f_after, t_step=args.t_step,
        f_mean=args.f_mean, f_amp=args.f_amp, f_mod=args.f_mod,
    )
    cfg = JointOscillatorConfig(inertia=args.inertia, damping=args.damping, theta0=args.theta0)
    trace = simulate_joint_oscillator(g, schedule, cfg, _integrator(args))
    write_trace_csv(ctx.path("joint_step.csv"), trace, ["theta", "theta_dot", "F"])

    if args.mode == "step":
        report = step_frequency_report(trace, g, schedule, cfg)
        emit_summary(ctx, {
            "f_before_hz": report.f_before,
            "f_after_hz": report.f_after,
            "ratio": report.ratio,
            "f_linear_before_hz": report.f_linear_before,
            "f_linear_after_hz": report.f_linear_after,
        })
        return

    sp = spectrum(trace, "theta", "hann")
    f1 = dominant_frequency(sp, (sp.bin_width, sp.nyquist))
    n = max(2, min(args.harmonics, int(sp.nyquist // f1)))
    emit_summary(ctx, {"f1_hz": f1, "harmonic_ratios": harmonic_ratios(sp, f1, n)})


# ---------------------------------------------------------------------------
# Magnetic spring
# ---------------------------------------------------------------------------

def _magnet_pair(args: argparse.Namespace):
    stiff, soft = default_magnetic_pair(args.A, args.z_off, args.soft_ratio)
    if args.table_stiff:
        stiff = load_magnet_table(args.table_stiff, "stiff")
    if args.table_soft:
        soft = load_magnet_table(args.table_soft, "soft")
    return stiff, soft


MAGNET_OPTIONS = [
    opt("--A", 1e-6, "Force scale of the stiff magnet pair (N*m^4)"),
    opt("--z-off", 0.01, "Separation at zero gap (m)"),
    opt("--soft-ratio", 0.6, "Soft force scale relative to stiff"),
    opt("--table-stiff", None, "CSV (gap_m, force_N) replacing the stiff model"),
    opt("--table-soft", None, "CSV (gap_m, force_N) replacing the soft model"),
]


@router.command(
    "magnet-curve",
    "Force versus gap for the stiff and soft magnet configurations",
    MAGNET_OPTIONS + [
        opt("--gap-min", 0.0, "Smallest gap (m)"),
        opt("--gap-max", 0.05, "Largest gap (m)"),
        opt("--points", 200, "Number of gaps"),
    ],
)
def cmd_magnet_curve(args: argparse.Namespace, ctx: RunContext):
    """Handle magnet-curve"""
    if not args.gap_max > args.gap_min or args.points < 2:
        raise ValueError("need gap-max > gap-min and at least two points")
    stiff, soft = _magnet_pair(args)
    gaps = np.linspace(args.gap_min, args.gap_max, args.points)
    f_stiff = magnetic_force(stiff, gaps)
    f_soft = magnetic_force(soft, gaps)
    write_table_csv(ctx.path("magnet_curve.csv"), ["gap", "force_stiff", "force_soft"], np.column_stack([gaps, f_stiff, f_soft]))
    emit_summary(ctx, {
        "force_stiff_at_gap_min": f_stiff[0],
        "force_soft_at_gap_min": f_soft[0],
        "stiff_dominates": bool(np.all(f_stiff >= f_soft)),
    })


@router.command(
    "pid-demo",
    "PID tracking on the magnetic spring versus its matched linear spring",
    MAGNET_OPTIONS[:2] + [
        opt("--table", None, "CSV (gap_m, force_N) replacing the parametric magnet"),
        opt("--mass", 0.1, "Moving mass (kg)"),
        opt("--gap", 0.01, "Equilibrium gap (m)"),
        opt("--damping", 1.0, "Plant viscous damping (N*s/m)"),
        opt("--kp", 2e4, "Proportional gain (N/m)"),
        opt("--ki", 2e5, "Integral gain (N/(m*s))"),
        opt("--kd", 60.0, "Derivative gain (N*s/m)"),
        opt("--saturation", 50.0, "Actuator force limit (N)"),
        opt("--ref-amp", 0.004, "Reference amplitude (m)"),
        opt("--ref-freq", 2.0, "Reference frequency (Hz)"),
    ] + _integration_options(1e-4, 4.0),
)
def cmd_pid_demo(args: argparse.Namespace, ctx: RunContext):
    """Handle pid-demo"""
    model = (
        load_magnet_table(args.table, "stiff") if args.table
        else MagneticSpringModel(A=args.A, z_off=args.z_off)
    )
    magnetic = SpringPlant(kind="magnetic", model=model, gap_eq=args.gap, damping=args.damping)
    linear = matched_linear_plant(magnetic)
    gains = PidGains(args.kp, args.ki, args.kd, args.saturation)
    reference = SineReference(args.ref_amp, args.ref_freq)
    icfg = _integrator(args)

    lin = pid_tracking_experiment(linear, args.mass, gains, reference, icfg)
    mag = pid_tracking_experiment(magnetic, args.mass, gains, reference, icfg)
    write_trace_csv(ctx.path("pid_linear.csv"), lin.trace, ["z", "z_ref", "u"])
    write_trace_csv(ctx.path("pid_magnetic.csv"), mag.trace, ["z", "z_ref", "u"])
    emit_summary(ctx, {
        "k_lin": linear.stiffness,
        "rms_linear": lin.rms_error,
        "rms_magnetic": mag.rms_error,
        "magnetic_harder": mag.rms_error > lin.rms_error,
    })


# ---------------------------------------------------------------------------
# Adaptive frequency oscillator
# ---------------------------------------------------------------------------

def _afo_params(args: argparse.Namespace, dp: DuffingParams) -> AfoParams:
    omega_init = args.omega_init if args.omega_init is not None else 1.1 * dp.omega0
    return AfoParams(mu=args.mu, eps=args.eps, omega_init=omega_init, input_gain=args.input_gain)


AFO_OPTIONS = [
    opt("--mu", 0.01, "Squared limit-cycle radius"),
    opt("--eps", 300.0, "Coupling strength"),
    opt("--input-gain", -0.02, "Plant position to oscillator input scale (1/m)"),
    opt("--f0", 3.0, "Plant linear resonance (Hz)"),
    opt("--damping", 0.5, "Plant damping (1/s)"),
    opt("--x0", 0.5, "Initial plant position (m)"),
    opt("--v0", 0.0, "Initial plant velocity (m/s)"),
]


def _envelopes(trace, t_early: float):
    env = amplitude_envelope(trace, "x")
    return envelope_at(env, t_early), envelope_at(env, trace.t_end)


@router.command(
    "afo-run",
    "Oscillator-driven cubic and linear plants plus the fixed-frequency reference",
    AFO_OPTIONS + [
        opt("--a3", 1.2e4, "Cubic stiffness of the plant"),
        opt("--A", 20.0, "Forcing amplitude (m/s^2)"),
        opt("--omega-init", None, "Initial oscillator frequency (rad/s, default 1.1*2*pi*f0)", type=float),
        opt("--f-drive", None, "Reference drive frequency (Hz, default f0)", type=float),
        opt("--t-early", 2.0, "Time of the early envelope sample (s)"),
        opt("--omega-scales", [], "Initial frequencies as multiples of 2*pi*f0 for the energy comparison",
            type=float, nargs="*"),
    ] + _integration_options(1e-3, 20.0),
)
def cmd_afo_run(args: argparse.Namespace, ctx: RunContext):
    """Handle afo-run"""
    dp = DuffingParams(damping=args.damping, f0=args.f0, a3=args.a3, A=args.A)
    ap = _afo_params(args, dp)
    plant = PlantState(args.x0, args.v0)
    icfg = _integrator(args)
    f_drive = args.f_drive if args.f_drive is not None else args.f0

    coupled = run_coupled_loop(ap, dp, icfg, plant)
    linear = run_coupled_loop(ap, dp.linear(), icfg, plant)
    reference = run_forced_reference(dp.linear(), f_drive, icfg, plant)
    for name, trace in (("coupled_trace.csv", coupled), ("coupled_trace_linear.csv", linear),
                        ("reference_trace.csv", reference)):
        write_trace_csv(ctx.path(name), trace, ["x", "v", "omega", "phi", "E"])

    early, end = _envelopes(coupled, args.t_early)
    lin_early, lin_end = _envelopes(linear, args.t_early)
    _, ref_end = _envelopes(reference, args.t_early)
    e_coupled = float(coupled.column("E")[-1])
    e_linear = float(linear.column("E")[-1])
    items: Dict[str, object] = {
        "envelope_early": early,
        "envelope_end": end,
        "envelope_linear_early": lin_early,
        "envelope_linear_end": lin_end,
        "envelope_reference_end": ref_end,
        "energy_end": e_coupled,
        "energy_linear_end": e_linear,
        "energy_ratio": e_coupled / e_linear if e_linear > 0 else math.inf,
        "omega_end": float(coupled.column("omega")[-1]),
    }

    if args.omega_scales:
        rows = energy_transfer_experiment(
            ap, dp, [s * dp.omega0 for s in args.omega_scales], icfg, plant, t_early=args.t_early,
        )
        write_table_csv(
            ctx.path("afo_energy.csv"),
            ["omega_init", "E_cubic", "E_linear", "ratio"],
            [[r.omega_init, r.energy_cubic, r.energy_linear, r.ratio] for r in rows],
        )
        items["ratio_above_5"] = f"{sum(r.ratio > 5 for r in rows)}/{len(rows)}"
    emit_summary(ctx, items)


def _contiguous(flags: Sequence[bool]) -> bool:
    hits = [i for i, flag in enumerate(flags) if flag]
    return bool(hits) and hits[-1] - hits[0] + 1 == len(hits)


@router.command(
    "afo-sweep",
    "Basin of initial oscillator frequencies that lock onto the linear plant",
    AFO_OPTIONS + [
        opt("--A", 0.0, "Forcing amplitude fed back to the plant (m/s^2)"),
        opt("--scale-min", 0.5, "Lowest initial frequency as a multiple of 2*pi*f0"),
        opt("--scale-max", 2.0, "Highest initial frequency as a multiple of 2*pi*f0"),
        opt("--points", 16, "Grid size"),
        opt("--tol", 0.02, "Relative convergence tolerance"),
    ] + _integration_options(1e-3, 20.0),
)
def cmd_afo_sweep(args: argparse.Namespace, ctx: RunContext):
    """Handle afo-sweep"""
    if args.points < 1 or not args.scale_max >= args.scale_min > 0:
        raise ValueError("need points >= 1 and scale-max >= scale-min > 0")
    dp = DuffingParams(damping=args.damping, f0=args.f0, a3=0.0, A=args.A)
    ap = AfoParams(mu=args.mu, eps=args.eps, omega_init=dp.omega0, input_gain=args.input_gain)
    grid = dp.omega0 * np.linspace(args.scale_min, args.scale_max, args.points)
    cells = basin_sweep(grid, ap, dp, _integrator(args), tol=args.tol, plant=PlantState(args.x0, args.v0))
    write_table_csv(
        ctx.path("basin.csv"),
        ["omega_init", "converged", "omega_final"],
        [[c.omega_init, float(c.converged), c.omega_final] for c in cells],
    )
    converged = [c.converged for c in cells]
    emit_summary(ctx, {
        "converged": f"{sum(converged)}/{len(cells)}",
        "diverged": sum(c.diverged for c in cells),
        "contiguous": _contiguous(converged),
    })


# ---------------------------------------------------------------------------
# Spectrum of a recorded trace
# ---------------------------------------------------------------------------

@router.command(
    "spectrum",
    "Amplitude spectrum, dominant frequency and harmonics of a CSV trace",
    [
        opt("--input", None, "Trace CSV with t as first column", required=True),
        opt("--channel", "x", "Channel to analyse"),
        opt("--window", "hann", "Window", choices=["none", "hann"]),
        opt("--band-lo", 0.0, "Lower edge of the dominant-frequency band (Hz)"),
        opt("--band-hi", None, "Upper edge of the band (Hz, default Nyquist)", type=float),
        opt("--harmonics", 5, "Highest harmonic reported"),
    ],
)
def cmd_spectrum(args: argparse.Namespace, ctx: RunContext):
    """Handle spectrum"""
    trace = read_trace_csv(args.input)
    sp = spectrum(trace, args.channel, args.window)
    band_hi = args.band_hi if args.band_hi is not None else sp.nyquist
    band_lo = max(args.band_lo, sp.bin_width)
    f1 = dominant_frequency(sp, (band_lo, band_hi))
    write_table_csv(ctx.path("spectrum.csv"), ["freq_hz", "magnitude"], np.column_stack([sp.freqs, sp.mags]))

    n = min(args.harmonics, int(sp.nyquist // f1))
    ratios = harmonic_ratios(sp, f1, n) if n >= 2 else []
    items: Dict[str, object] = {"dominant_hz": f1, "harmonic_ratios": ratios}
    odd = sum(r for k, r in enumerate(ratios, start=2) if k % 2 == 1)
    even = sum(r for k, r in enumerate(ratios, start=2) if k % 2 == 0)
    if ratios:
        items["odd_even_ratio"] = odd / even if even > 0 else math.inf
    emit_summary(ctx, items)


# ---------------------------------------------------------------------------
# Swimmer
# ---------------------------------------------------------------------------

SWIM_OPTIONS = [
    opt("--amplitude", 0.3, "Motor angle amplitude (rad)"),
    opt("--frequency", 1.0, "Motor frequency (Hz)"),
    opt("--phase", 0.0, "Motor phase (rad)"),
    opt("--duration", 10.0, "Run length (s)"),
    opt("--dt", 1e-3, "Integrator step (s)"),
    opt("--stride", 10, "Record every k-th step"),
    opt("--c-normal", 5.0, "Normal drag per unit length"),
    opt("--c-tangential", 1.0, "Tangential drag per unit length"),
    opt("--joint-damping", 1e-4, "Joint viscous damping (N*m*s/rad)"),
    opt("--k-min", 0.005, "Lower stiffness bound (N*m/rad)"),
    opt("--k-max", 0.5, "Upper stiffness bound (N*m/rad)"),
    opt("--passive-law", "linear", "Compliant joint model", choices=["linear", "tunable"]),
]


def _swimmer_config(args: argparse.Namespace) -> SwimmerConfig:
    return SwimmerConfig(
        c_normal=args.c_normal,
        c_tangential=args.c_tangential,
        joint_damping=args.joint_damping,
        k_min=args.k_min,
        k_max=args.k_max,
        passive_law=args.passive_law,
    )


def _swim_integrator(args: argparse.Namespace) -> IntegratorConfig:
    return IntegratorConfig(dt=args.dt, t_end=args.duration, record_stride=args.stride)


@router.command(
    "swim",
    "Single swimmer run with a given stiffness profile",
    SWIM_OPTIONS + [
        opt("--k", [0.05], "One (homogeneous) or four joint stiffnesses (N*m/rad)", type=float, nargs="+"),
    ],
)
def cmd_swim(args: argparse.Namespace, ctx: RunContext):
    """Handle swim"""
    if len(args.k) == 1:
        profile = StiffnessProfile.homogeneous(args.k[0])
    elif len(args.k) == 4:
        profile = StiffnessProfile(tuple(args.k))
    else:
        raise ValueError(f"--k takes one or four values, got {len(args.k)}")
    act = ActuationParams(args.amplitude, args.frequency, args.phase)
    result = simulate_swimmer(_swimmer_config(args), profile, act, args.duration, _swim_integrator(args))
    write_trace_csv(ctx.path("swim_trace.csv"), result.trace)
    emit_summary(ctx, {
        "speed": result.metrics.speed,
        "thrust": result.metrics.thrust,
        "power": result.metrics.power,
    })


@router.command(
    "swim-opt",
    "Homogeneous oracle followed by the multi-start stiffness optimizer",
    SWIM_OPTIONS + [
        opt("--grid-size", 12, "Homogeneous grid size (log-spaced over the box)"),
        opt("--restarts", 5, "Optimizer restarts"),
        opt("--seed", 0, "Seed for the random restarts"),
        opt("--max-evaluations", 40, "Objective evaluations per restart"),
    ],
)
def cmd_swim_opt(args: argparse.Namespace, ctx: RunContext):
    """Handle swim-opt"""
    cfg = _swimmer_config(args)
    act = ActuationParams(args.amplitude, args.frequency, args.phase)
    settings = OptimizerSettings(restarts=args.restarts, seed=args.seed, max_evaluations=args.max_evaluations)
    result = optimize_stiffness(
        cfg, act, settings, args.duration, _swim_integrator(args), k_grid=default_k_grid(cfg, args.grid_size),
    )
    write_table_csv(
        ctx.path("oracle_table.csv"), ["k", "thrust"], [[c.k, c.thrust] for c in result.oracle.table],
    )
    write_table_csv(
        ctx.path("optimizer_history.csv"),
        ["restart", "evaluation", "k1", "k2", "k3", "k4", "thrust"],
        [[e.restart, e.evaluation, *e.k, e.thrust] for e in result.history],
    )
    emit_summary(ctx, {
        "oracle_k_best": result.oracle.k_best,
        "oracle_thrust": result.oracle.metric_best,
        "metric_best": result.metric_best,
        "profile_best": list(result.profile_best.k),
        "improvement": result.improvement,
        "strictly_better": result.metric_best > result.oracle.metric_best,
    })


@router.command(
    "swim-map",
    "Best homogeneous stiffness over a grid of actuation frequencies and amplitudes",
    SWIM_OPTIONS + [
        opt("--freqs", [0.5, 1.0, 2.0], "Actuation frequencies (Hz)", type=float, nargs="+"),
        opt("--amps", [0.2, 0.4], "Actuation amplitudes (rad)", type=float, nargs="+"),
        opt("--grid-size", 8, "Homogeneous grid size (log-spaced over the box)"),
    ],
)
def cmd_swim_map(args: argparse.Namespace, ctx: RunContext):
    """Handle swim-map"""
    cfg = _swimmer_config(args)
    cells = actuation_map(
        cfg, args.freqs, args.amps, default_k_grid(cfg, args.grid_size), _swim_integrator(args),
        duration=args.duration,
    )
    write_table_csv(
        ctx.path("actuation_map.csv"),
        ["freq_hz", "amplitude_rad", "k_best", "thrust"],
        [[c.freq_hz, c.amplitude, c.k_best, c.thrust] for c in cells],
    )
    best = max(cells, key=lambda c: c.thrust)
    emit_summary(ctx, {"best_freq_hz": best.freq_hz, "best_amplitude_rad": best.amplitude, "best_thrust": best.thrust})


# ---------------------------------------------------------------------------
# Entry
# ---------------------------------------------------------------------------

def run_command(argv: List[str], log_dir: Optional[str] = None, log_level: str = "INFO") -> int:
    """
    Parse ``argv``, run one subcommand and write its manifest.

    Args:
        argv: Arguments without the program name
        log_dir: Configure file logging into this directory (None leaves logging alone)
        log_level: Console level when logging is configured

    Returns:
        0 on success, 1 on a runtime failure, 2 on a usage error
    """
    parser = router.build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    if log_dir is not None:
        setup_logging(log_dir, log_level)

    command = router.commands[args.subcommand]
    ctx = RunContext(args.out_dir)
    logger.info(f"🚀 Running {command.name}")
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        command.handler(args, ctx)
        parameters = {k: v for k, v in vars(args).items() if k != "subcommand"}
        manifest = RunManifest(
            subcommand=command.name,
            parameters=parameters,
            seed=getattr(args, "seed", None),
            outputs=list(ctx.outputs),
        )
        write_manifest(os.path.join(args.out_dir, MANIFEST_NAME), manifest)
    except (MorphosimError, ValueError, KeyError, OSError) as e:
        logger.error(f"❌ {command.name} failed: {e}")
        print(f"❌ {command.name} failed: {e}", file=sys.stderr)
        return 1

    logger.info(f"✅ {command.name} finished, outputs in '{args.out_dir}'")
    return 0
