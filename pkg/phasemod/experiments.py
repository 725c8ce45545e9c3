"""Virtual experiments: parameter sweeps that pair the closed-form couplings with
brute-force dynamics and return ``SweepGrid`` tables.

Every run is a pure function of its ``ExperimentConfig``. Sweep points are independent
and are mapped in grid order, inline or on a process pool.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np
from scipy import optimize
from tqdm import tqdm

from phasemod.constants import (
    COUPLER_FLUX,
    NS_PER_S,
    REFERENCE_2G,
    ExperimentConfig,
    FluxPulse,
    ModulationProfile,
    PhaseCoupling,
    SummaryRow,
    SweepGrid,
    TransferTable,
    TwoQubitSystem,
)
from phasemod.coupling_theory import (
    coupler_mediated_coupling,
    effective_phases,
    find_zero_coupling_flux,
    phase_coupling,
    resonant_drive_frequency,
    sideband_stark_shift,
)
from phasemod.dynamics_engine import evolve, fit_damped_cosine, stable_step
from phasemod.errors import (
    ConfigError,
    ModelValidityError,
    NoOscillationError,
    NoZeroError,
    ResonanceMismatchError,
)
from phasemod.modulation_analysis import (
    excursion_from_shift,
    fourier_coefficients,
    sideband_spectrum,
    taylor_fourier_table,
)
from phasemod.transmon_model import qubit_frequency

logger = logging.getLogger(__name__)

PERIODS_PER_WINDOW = 3.5
MIN_RELATIVE_WINDOW = 0.25
RESONANCE_TOLERANCE = 1e-4
SCAN_POINTS = 21
SCAN_HALF_WIDTH = 0.020
SPECTRUM_ORDERS = 3
SPECTRUM_BINS = 801
TAYLOR_FOURIER_PAIRS = ((0.0, 0.4), (0.15, 0.3))


# ==========================================
# 🧰 SHARED HELPERS
# ==========================================
def _map_points(func, items, workers: int, progress: bool, desc: str) -> list:
    """Ordered map over sweep points; ``workers > 1`` uses a process pool."""
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(tqdm(pool.map(func, items), total=len(items), desc=desc, disable=not progress))
    return [func(item) for item in tqdm(items, desc=desc, disable=not progress)]


def axis_values(cfg: ExperimentConfig) -> np.ndarray:
    sweep = cfg.sweep
    return np.linspace(sweep.start, sweep.stop, sweep.points)


def _require_axis(cfg: ExperimentConfig, *allowed: str) -> None:
    if cfg.sweep.axis not in allowed:
        raise ConfigError(f"sweep.axis = {cfg.sweep.axis!r}; this experiment sweeps {' or '.join(allowed)}")


def _modulated(pulse: FluxPulse) -> bool:
    return pulse.phi_tilde > 0


def modulation_profile(params, pulse: FluxPulse, harmonics: int = 12) -> ModulationProfile:
    """Fourier profile of one qubit; ω̄ and f_k do not depend on ω_p."""
    if _modulated(pulse) and pulse.omega_p <= 0:
        pulse = pulse.model_copy(update={"omega_p": 1.0})
    return fourier_coefficients(params, pulse, harmonics)


def _profiles(cfg: ExperimentConfig, p1: FluxPulse, p2: FluxPulse):
    k_max = cfg.sweep.harmonics
    return (
        modulation_profile(cfg.system.q1, p1, k_max),
        modulation_profile(cfg.system.q2, p2, k_max),
    )


def _drive_layout(p1: FluxPulse, p2: FluxPulse):
    """(ω_p pair, sweet flags) with an undriven qubit borrowing its partner's drive."""
    reference = p1 if _modulated(p1) else p2
    pulses = [p if _modulated(p) else reference for p in (p1, p2)]
    omegas = tuple(p.omega_p for p in pulses)
    sweet = tuple(p.is_sweet and _modulated(p) or (not _modulated(p) and reference.is_sweet) for p in pulses)
    return omegas, sweet


def _excursions(p1, p2, prof1, prof2) -> tuple[float, float]:
    return (
        prof1.base_amplitude if _modulated(p1) else 0.0,
        prof2.base_amplitude if _modulated(p2) else 0.0,
    )


def analytic_coupling(cfg: ExperimentConfig, p1: FluxPulse, p2: FluxPulse, n: int, profiles=None) -> PhaseCoupling:
    """Closed-form coupling of the configured drives (signed harmonic amplitudes)."""
    prof1, prof2 = profiles or _profiles(cfg, p1, p2)
    g = cfg.system.g
    if not (_modulated(p1) or _modulated(p2)):
        return PhaseCoupling(order=n, argument_a=0.0, magnitude=g if n == 0 else 0.0,
                             prefactor_phase=0.0, interaction_phase=0.0)
    eps1, eps2 = _excursions(p1, p2, prof1, prof2)
    omegas, sweet = _drive_layout(p1, p2)
    return phase_coupling(g, eps1, eps2, omegas, p2.phi_p - p1.phi_p, n, sweet, phi_p1=p1.phi_p)


def detuning(prof1: ModulationProfile, prof2: ModulationProfile) -> float:
    """Δ = ω̄2 − ω̄1 (GHz)."""
    return prof2.omega_bar - prof1.omega_bar


def _with_phase(p1: FluxPulse, p2: FluxPulse, dphi: float) -> FluxPulse:
    return p2.model_copy(update={"phi_p": p1.phi_p + dphi})


def _resonant_frequency(cfg, p1, p2, prof1, prof2, n: int, dphis) -> float:
    """Effective drive frequency on the dressed resonance, averaged over ``dphis``."""
    eps1, eps2 = _excursions(p1, p2, prof1, prof2)
    _, sweet = _drive_layout(p1, p2)
    delta = detuning(prof1, prof2)
    values = []
    for dphi in dphis:
        e1, e2, phi1, phi2 = effective_phases(eps1, eps2, dphi, sweet, p1.phi_p)
        values.append(resonant_drive_frequency(delta, cfg.system.g, n, e1, e2, phi2 - phi1))
    return float(np.mean(values))


def _retune(p1: FluxPulse, p2: FluxPulse, omega_eff: float) -> tuple[FluxPulse, FluxPulse]:
    _, sweet = _drive_layout(p1, p2)
    tuned = []
    for pulse, is_sweet in zip((p1, p2), sweet):
        if _modulated(pulse):
            pulse = pulse.model_copy(update={"omega_p": omega_eff / (2 if is_sweet else 1)})
        tuned.append(pulse)
    return tuned[0], tuned[1]


def _place_on_resonance(cfg, p1, p2, n: int, dphis) -> tuple[FluxPulse, FluxPulse]:
    if not cfg.sweep.auto_resonance or n == 0:
        return p1, p2
    prof1, prof2 = _profiles(cfg, p1, p2)
    omega_eff = _resonant_frequency(cfg, p1, p2, prof1, prof2, n, dphis)
    logger.info("drive placed on the n = %d resonance at %.6f GHz (effective)", n, omega_eff)
    return _retune(p1, p2, omega_eff)


def _window(cfg: ExperimentConfig, strengths) -> float:
    """Evolution window (s): 3.5 periods of the weakest coupling worth resolving."""
    if cfg.sweep.t_final is not None:
        return cfg.sweep.t_final
    strengths = np.abs(np.asarray(strengths, dtype=float))
    strongest = float(np.max(strengths)) if strengths.size else 0.0
    if strongest <= cfg.sweep.detect_floor:
        raise ConfigError("no sweep point has a detectable coupling; set sweep.t_final explicitly")
    visible = strengths[strengths > cfg.sweep.detect_floor]
    reference = max(float(np.min(visible)), MIN_RELATIVE_WINDOW * strongest)
    return PERIODS_PER_WINDOW / reference / NS_PER_S


def _fit_band(p1: FluxPulse, p2: FluxPulse) -> float | None:
    drives = [p.omega_p for p in (p1, p2) if _modulated(p) and p.omega_p > 0]
    return 0.5 * min(drives) if drives else None


def _sample_rows(count: int, samples: int) -> np.ndarray:
    return np.unique(np.round(np.linspace(0, count - 1, min(samples, count))).astype(int))


def _rk4_step(system: TwoQubitSystem, p1: FluxPulse, p2: FluxPulse, dt: float) -> float:
    """Configured dt, reduced to the stable step of this drive pair when coarser."""
    limit = stable_step(system, p1, p2)
    if dt > limit:
        logger.debug("dt %.3g s exceeds the stable step %.3g s; using the latter", dt, limit)
        return limit
    return dt


def _measure(system: TwoQubitSystem, p1: FluxPulse, p2: FluxPulse, t_final: float, dt: float, samples: int):
    """Evolve |10⟩, fit the exchange oscillation; returns (times, P10, fit or None)."""
    trace = evolve(system, p1, p2, "10", t_final, _rk4_step(system, p1, p2, dt))
    population = trace.channel("10")
    rows = _sample_rows(population.size, samples)
    try:
        fit = fit_damped_cosine(trace.times, population, max_frequency=_fit_band(p1, p2))
    except NoOscillationError as exc:
        logger.debug("no oscillation: %s", exc)
        fit = None
    return trace.times[rows], population[rows], fit


def _summary(x: float, fit, analytic: float, floor: float) -> SummaryRow:
    if fit is None:
        flag = "cancellation" if analytic < floor else "no-oscillation"
        return SummaryRow(x=x, value=0.0, uncertainty=0.0, analytic=analytic, flag=flag)
    return SummaryRow(x=x, value=fit.frequency, uncertainty=fit.residual, analytic=analytic)


# ==========================================
# 🔁 PHASE SWEEPS (first order and parametric resonance)
# ==========================================
def _phase_point(cfg, p1, p2, t_final, n, dphi):
    p2 = _with_phase(p1, p2, dphi)
    strength = analytic_coupling(cfg, p1, p2, n).strength
    if not cfg.sweep.dynamics:
        return None, np.array([strength]), SummaryRow(x=dphi, value=strength, analytic=strength)
    times, population, fit = _measure(cfg.system, p1, p2, t_final, cfg.sweep.dt, cfg.sweep.samples)
    return times, population, _summary(dphi, fit, strength, cfg.sweep.detect_floor)


def _phase_sweep(cfg: ExperimentConfig, n: int, workers: int, progress: bool, desc: str) -> SweepGrid:
    _require_axis(cfg, "dphi")
    dphis = axis_values(cfg)
    p1, p2 = _place_on_resonance(cfg, *cfg.pulses, n, dphis)
    couplings = [analytic_coupling(cfg, p1, _with_phase(p1, p2, d), n) for d in dphis]
    strengths = [c.strength for c in couplings]
    t_final = _window(cfg, strengths) if cfg.sweep.dynamics else 0.0

    results = _map_points(partial(_phase_point, cfg, p1, p2, t_final, n), dphis, workers, progress, desc)
    columns = [r[1] for r in results]
    y = results[0][0] if cfg.sweep.dynamics else np.array([0.0])
    arguments = np.abs([c.argument_a for c in couplings])
    metadata = {
        "order": str(n),
        "omega_p1_ghz": repr(p1.omega_p),
        "omega_p2_ghz": repr(p2.omega_p),
        "effective_drive_ghz": repr(couplings[0].drive_frequency),
        "t_final_s": repr(t_final),
        "abs_a_min": repr(float(arguments.min())),
        "abs_a_max": repr(float(arguments.max())),
        "z": "population |10>" if cfg.sweep.dynamics else "analytic 2g (GHz)",
    }
    return SweepGrid(
        x_name="dphi (rad)",
        y_name="time (s)" if cfg.sweep.dynamics else "row",
        x=dphis,
        y=y,
        z=np.column_stack(columns),
        summary=tuple(r[2] for r in results),
        metadata=metadata,
    )


def run_phase_sweep(cfg: ExperimentConfig, workers: int = 1, progress: bool = False) -> SweepGrid:
    """Coupling strength 2g_phase versus relative drive phase at a fixed sideband."""
    return _phase_sweep(cfg, cfg.sweep.order, workers, progress, "phase sweep")


def match_mean_frequencies(cfg: ExperimentConfig) -> tuple[ExperimentConfig, int]:
    """Retune the amplitude of the qubit with the higher ω̄ so that ω̄1 = ω̄2 (n = 0 resonance).

    A modulation only lowers the mean frequency, so the upper qubit is the one that can move.
    Returns the new config and the retuned qubit index.
    """
    params = (cfg.system.q1, cfg.system.q2)
    pulses = list(cfg.pulses)
    means = [modulation_profile(q, p).omega_bar for q, p in zip(params, pulses)]
    index = 0 if means[0] > means[1] else 1
    pulse = pulses[index]
    static = qubit_frequency(params[index], pulse.phi_bar)
    phi_tilde = excursion_from_shift(params[index], pulse.phi_bar, pulse.omega_p or 1.0, means[1 - index] - static)
    omega_p = pulse.omega_p or pulses[1 - index].omega_p
    pulses[index] = pulse.model_copy(update={"phi_tilde": phi_tilde, "omega_p": omega_p})
    logger.info("qubit %d amplitude retuned to %.6g Phi0 for equal mean frequencies", index + 1, phi_tilde)
    return cfg.model_copy(update={"pulses": tuple(pulses)}), index


def run_parametric_resonance(cfg: ExperimentConfig, workers: int = 1, progress: bool = False) -> SweepGrid:
    """Phase sweep of the n = 0 coupling g·J_0(A) between mean-frequency-matched qubits."""
    retuned = None
    if cfg.sweep.auto_resonance:
        cfg, retuned = match_mean_frequencies(cfg)
    prof1, prof2 = _profiles(cfg, *cfg.pulses)
    mismatch = detuning(prof1, prof2)
    if abs(mismatch) > RESONANCE_TOLERANCE:
        raise ResonanceMismatchError(
            f"time-averaged frequencies differ by {mismatch * 1e3:.4f} MHz (tolerance 0.1 MHz)", detuning=mismatch
        )
    grid = _phase_sweep(cfg, 0, workers, progress, "parametric resonance")
    metadata = dict(
        grid.metadata,
        mean_detuning_ghz=repr(mismatch),
        phi_tilde1=repr(cfg.pulses[0].phi_tilde),
        phi_tilde2=repr(cfg.pulses[1].phi_tilde),
        retuned_qubit="none" if retuned is None else str(retuned + 1),
    )
    return grid.model_copy(update={"metadata": metadata})


# ==========================================
# 🪶 CHEVRONS
# ==========================================
def _chevron_pulses(cfg, axis: str, value: float, p1: FluxPulse, p2: FluxPulse):
    if axis == "dphi":
        return p1, _with_phase(p1, p2, value)
    if axis == "omega_p":
        _, sweet = _drive_layout(p1, p2)
        h1 = 2 if sweet[0] else 1
        return _retune(p1, p2, h1 * value)
    return p1.model_copy(update={"phi_tilde": value}), p2


def _chevron_point(cfg, axis, p1, p2, t_final, value):
    q1, q2 = _chevron_pulses(cfg, axis, value, p1, p2)
    strength = analytic_coupling(cfg, q1, q2, cfg.sweep.order).strength
    times, population, fit = _measure(cfg.system, q1, q2, t_final, cfg.sweep.dt, cfg.sweep.samples)
    return times, population, _summary(value, fit, strength, cfg.sweep.detect_floor)


def resonance_centre(x: np.ndarray, z: np.ndarray) -> float:
    """Transfer-weighted centre of the columns that reach at least half the deepest transfer."""
    transfer = 1.0 - z.min(axis=0)
    weights = np.where(transfer >= 0.5 * transfer.max(), transfer, 0.0)
    return float(np.sum(weights * x) / np.sum(weights))


def run_chevron(cfg: ExperimentConfig, axis: str | None = None, workers: int = 1, progress: bool = False) -> SweepGrid:
    """Population of |10⟩ versus time and one drive parameter."""
    axis = axis or cfg.sweep.axis
    if axis not in ("dphi", "omega_p", "phi_tilde"):
        raise ConfigError(f"chevron axis must be dphi, omega_p or phi_tilde, got {axis!r}")
    n = cfg.sweep.order
    values = axis_values(cfg)
    p1, p2 = cfg.pulses
    if axis != "omega_p":
        p1, p2 = _place_on_resonance(cfg, p1, p2, n, [p2.phi_p - p1.phi_p])
    strengths = [analytic_coupling(cfg, *_chevron_pulses(cfg, axis, v, p1, p2), n).strength for v in values]
    t_final = _window(cfg, [max(strengths)])

    results = _map_points(partial(_chevron_point, cfg, axis, p1, p2, t_final), values, workers, progress, "chevron")
    z = np.column_stack([r[1] for r in results])
    metadata = {"axis": axis, "order": str(n), "t_final_s": repr(t_final), "z": "population |10>"}
    if axis == "omega_p":
        prof1, prof2 = _profiles(cfg, p1, p2)
        _, sweet = _drive_layout(p1, p2)
        h1 = 2 if sweet[0] else 1
        bare = -detuning(prof1, prof2) / (n * h1) if n else float("nan")
        dressed = _resonant_frequency(cfg, p1, p2, prof1, prof2, n, [p2.phi_p - p1.phi_p]) / h1 if n else bare
        metadata.update(
            resonance_centre_ghz=repr(resonance_centre(values, z)),
            analytic_resonance_ghz=repr(dressed),
            bare_resonance_ghz=repr(bare),
            grid_step_ghz=repr(float(values[1] - values[0]) if values.size > 1 else 0.0),
        )
    return SweepGrid(
        x_name={"dphi": "dphi (rad)", "omega_p": "omega_p (GHz)", "phi_tilde": "phi_tilde (Phi0)"}[axis],
        y_name="time (s)",
        x=values,
        y=results[0][0],
        z=z,
        summary=tuple(r[2] for r in results),
        metadata=metadata,
    )


# ==========================================
# 📶 AMPLITUDE DEPENDENCE
# ==========================================
def _driven_index(cfg: ExperimentConfig) -> int:
    driven = [i for i, p in enumerate(cfg.pulses) if p.omega_p > 0 or _modulated(p)]
    if len(driven) != 1:
        raise ConfigError("amplitude-coupling expects exactly one driven qubit (omega_p > 0)")
    return driven[0]


def _set_amplitude(cfg: ExperimentConfig, index: int, phi_tilde: float, omega_p: float | None = None):
    pulses = list(cfg.pulses)
    update = {"phi_tilde": phi_tilde}
    if omega_p is not None:
        update["omega_p"] = omega_p
    pulses[index] = pulses[index].model_copy(update=update)
    return pulses[0], pulses[1]


def _transfer_contrast(cfg, index, phi_tilde, window, omega_p) -> float:
    p1, p2 = _set_amplitude(cfg, index, phi_tilde, omega_p)
    trace = evolve(cfg.system, p1, p2, "10", window, _rk4_step(cfg.system, p1, p2, cfg.sweep.dt))
    return float(1.0 - trace.channel("10").min())


def find_resonance(cfg: ExperimentConfig, index: int, phi_tilde: float) -> tuple[float, float]:
    """Drive frequency (GHz) of the n-th sideband for one amplitude, plus its 2g_eff estimate."""
    n = cfg.sweep.order
    pulse = cfg.pulses[index]
    h = 2 if pulse.is_sweet else 1
    p1, p2 = _set_amplitude(cfg, index, phi_tilde, pulse.omega_p or 1.0)
    prof1, prof2 = _profiles(cfg, p1, p2)
    analytic = _resonant_frequency(cfg, p1, p2, prof1, prof2, n, [0.0]) / h
    strength = analytic_coupling(cfg, *_retune(p1, p2, analytic * h), n, (prof1, prof2)).strength
    if cfg.sweep.resonance_search == "analytic" or strength <= cfg.sweep.detect_floor:
        return analytic, strength

    window = 0.75 / strength / NS_PER_S
    scan = analytic + np.linspace(-SCAN_HALF_WIDTH, SCAN_HALF_WIDTH, SCAN_POINTS)
    scan = scan[scan > 0]
    contrast = [_transfer_contrast(cfg, index, phi_tilde, window, w) for w in scan]
    best = int(np.argmax(contrast))
    if best in (0, len(scan) - 1):
        raise ConfigError(f"resonance for phi_tilde = {phi_tilde:.4g} is not bracketed by the ±20 MHz scan")
    step = scan[1] - scan[0]
    refined = optimize.minimize_scalar(
        lambda w: -_transfer_contrast(cfg, index, phi_tilde, window, w),
        bounds=(scan[best] - step, scan[best] + step),
        method="bounded",
        options={"xatol": 1e-6},
    )
    return float(refined.x), strength


def _amplitude_point(cfg, index, omega_reference, phi_tilde):
    omega_p, analytic = find_resonance(cfg, index, phi_tilde)
    value, uncertainty, flag = analytic, 0.0, "analytic"
    if cfg.sweep.dynamics and analytic > cfg.sweep.detect_floor:
        p1, p2 = _set_amplitude(cfg, index, phi_tilde, omega_p)
        t_final = cfg.sweep.t_final or PERIODS_PER_WINDOW / analytic / NS_PER_S
        _, _, fit = _measure(cfg.system, p1, p2, t_final, cfg.sweep.dt, cfg.sweep.samples)
        if fit is None:
            value, flag = 0.0, "no-oscillation"
        else:
            value, uncertainty, flag = fit.frequency, fit.residual, ""
    drift = abs(omega_p - omega_reference)
    return (omega_p, drift, value), SummaryRow(x=phi_tilde, value=value, uncertainty=uncertainty,
                                               analytic=analytic, flag=flag)


def run_amplitude_coupling(cfg: ExperimentConfig, workers: int = 1, progress: bool = False) -> SweepGrid:
    """Single-drive sideband coupling and resonance drift Δ_p versus amplitude."""
    _require_axis(cfg, "phi_tilde")
    index = _driven_index(cfg)
    amplitudes = axis_values(cfg)
    if np.any(amplitudes < 0):
        raise ConfigError("phi_tilde sweep values must be non-negative")
    pulse = cfg.pulses[index]
    h = 2 if pulse.is_sweet else 1
    p1, p2 = _set_amplitude(cfg, index, 0.0, pulse.omega_p or 1.0)
    prof1, prof2 = _profiles(cfg, p1, p2)
    n = cfg.sweep.order
    if n == 0:
        raise ConfigError("amplitude-coupling needs a sideband order n != 0")
    # Bare zero-amplitude resonance; the dressed one is undefined as the coupling vanishes.
    omega_reference = -detuning(prof1, prof2) / (n * h)
    if omega_reference <= 0:
        raise ResonanceMismatchError(f"sideband n = {n} cannot bridge the static detuning", detuning=-omega_reference)

    results = _map_points(partial(_amplitude_point, cfg, index, omega_reference), amplitudes, workers, progress,
                          "amplitude sweep")
    z = np.array([r[0] for r in results]).T
    return SweepGrid(
        x_name="phi_tilde (Phi0)",
        y_name="row (0: omega_p GHz, 1: delta_p GHz, 2: 2g_eff GHz)",
        x=amplitudes,
        y=np.arange(3, dtype=float),
        z=z,
        summary=tuple(r[1] for r in results),
        metadata={
            "driven_qubit": str(index + 1),
            "order": str(cfg.sweep.order),
            "omega_p_zero_amplitude_ghz": repr(omega_reference),
            "resonance_search": cfg.sweep.resonance_search,
        },
    )


# ==========================================
# 🔭 SPECTROSCOPY (analytic, dressed sidebands)
# ==========================================
def _spectroscopy_lines(cfg, p1, p2, n):
    prof1, prof2 = _profiles(cfg, p1, p2)
    coupling = analytic_coupling(cfg, p1, p2, n, (prof1, prof2))
    spectrum = sideband_spectrum(prof1, p1 if _modulated(p1) else p2, SPECTRUM_ORDERS)
    omega = coupling.drive_frequency
    g_eff = abs(coupling.magnitude)
    if omega > 0 and n != 0:
        stark = sideband_stark_shift(cfg.system.g, coupling.argument_a, omega, n)
    else:
        stark = 0.0
    offset = detuning(prof1, prof2) + n * omega + 2.0 * stark
    gap = math.hypot(offset, 2.0 * g_eff)
    crossing = prof1.omega_bar - n * omega if omega > 0 else prof1.omega_bar
    lines = []
    for frequency, weight in spectrum.peaks:
        if abs(frequency - crossing) < 1e-9:
            mix = 0.5 if gap == 0 else 0.5 * (1.0 + offset / gap)
            centre = 0.5 * (crossing + prof2.omega_bar)
            lines.append((centre - 0.5 * gap, weight * mix))
            lines.append((centre + 0.5 * gap, weight * (1.0 - mix)))
        else:
            lines.append((frequency, weight))
    return lines, gap, coupling.strength


def _spectroscopy_point(cfg, axis, p1, p2, n, value):
    q1, q2 = _chevron_pulses(cfg, axis, value, p1, p2)
    return _spectroscopy_lines(cfg, q1, q2, n)


def _binned(lines_per_column, bins: int) -> tuple[np.ndarray, np.ndarray]:
    frequencies = [f for lines in lines_per_column for f, _ in lines]
    low, high = min(frequencies) - 0.01, max(frequencies) + 0.01
    axis = np.linspace(low, high, bins)
    z = np.zeros((bins, len(lines_per_column)))
    for column, lines in enumerate(lines_per_column):
        for frequency, weight in lines:
            z[int(np.argmin(np.abs(axis - frequency))), column] += weight
    return axis, z


def run_spectroscopy(cfg: ExperimentConfig, probe_axis: str | None = None, workers: int = 1,
                     progress: bool = False) -> SweepGrid:
    """Dressed sideband spectrum of qubit 1; summary is the avoided-crossing gap."""
    axis = probe_axis or cfg.sweep.axis
    if axis not in ("dphi", "phi_tilde"):
        raise ConfigError(f"spectroscopy sweeps dphi or phi_tilde, got {axis!r}")
    n = cfg.sweep.order
    values = axis_values(cfg)
    p1, p2 = cfg.pulses
    dphis = values if axis == "dphi" else [p2.phi_p - p1.phi_p]
    p1, p2 = _place_on_resonance(cfg, p1, p2, n, dphis)
    results = _map_points(partial(_spectroscopy_point, cfg, axis, p1, p2, n), values, workers, progress,
                          "spectroscopy")
    frequency_axis, z = _binned([r[0] for r in results], SPECTRUM_BINS)
    summary = tuple(SummaryRow(x=v, value=r[1], analytic=r[2]) for v, r in zip(values, results))
    return SweepGrid(
        x_name="dphi (rad)" if axis == "dphi" else "phi_tilde (Phi0)",
        y_name="probe frequency (GHz)",
        x=values,
        y=frequency_axis,
        z=z,
        summary=summary,
        metadata={"order": str(n), "omega_p1_ghz": repr(p1.omega_p), "z": "sideband weight per bin"},
    )


def _spectrum_point(cfg, driven, phi_tilde):
    pulses = list(cfg.pulses)
    for i in driven:
        pulses[i] = pulses[i].model_copy(update={"phi_tilde": phi_tilde})
    lines, profiles = [], []
    for params, pulse in zip((cfg.system.q1, cfg.system.q2), pulses):
        if pulse.omega_p <= 0:
            profiles.append(None)
            lines.append((qubit_frequency(params, pulse.phi_bar), 1.0))
            continue
        profile = fourier_coefficients(params, pulse, cfg.sweep.harmonics)
        profiles.append(profile)
        lines.extend(sideband_spectrum(profile, pulse, SPECTRUM_ORDERS).peaks)
    first = profiles[driven[0]]
    return lines, SummaryRow(x=phi_tilde, value=first.omega_bar, analytic=first.excursion,
                             flag="sweet" if first.base_harmonic == 2 else "off-sweet")


def run_sideband_spectrum(cfg: ExperimentConfig, workers: int = 1, progress: bool = False) -> SweepGrid:
    """Bare sideband spectra of both qubits versus modulation amplitude."""
    _require_axis(cfg, "phi_tilde")
    amplitudes = axis_values(cfg)
    driven = [i for i, p in enumerate(cfg.pulses) if p.omega_p > 0]
    if not driven:
        raise ConfigError("spectrum needs at least one pulse with omega_p > 0")
    results = _map_points(partial(_spectrum_point, cfg, tuple(driven)), amplitudes, workers, progress, "spectrum")
    columns = [r[0] for r in results]
    summary = [r[1] for r in results]
    frequency_axis, z = _binned(columns, SPECTRUM_BINS)
    spacings = {
        f"spacing_q{i + 1}_ghz": repr((2 if cfg.pulses[i].is_sweet else 1) * cfg.pulses[i].omega_p) for i in driven
    }
    return SweepGrid(
        x_name="phi_tilde (Phi0)",
        y_name="frequency (GHz)",
        x=amplitudes,
        y=frequency_axis,
        z=z,
        summary=tuple(summary),
        metadata={"z": "J_k^2 weight per bin", "summary": "value = omega_bar, analytic = excursion", **spacings},
    )


# ==========================================
# 🎚️ TRANSFER FUNCTION
# ==========================================
def transfer_factor(table: TransferTable, omega_p: float) -> float:
    low, high = table.frequencies[0], table.frequencies[-1]
    if not low <= omega_p <= high:
        raise ConfigError(f"omega_p = {omega_p:.6g} GHz lies outside the transfer table [{low:.6g}, {high:.6g}]")
    return float(np.interp(omega_p, table.frequencies, table.factors))


def ramsey_fringe(shift: float, delays) -> np.ndarray:
    """Ramsey-like population (1 + cos 2π·shift·τ)/2 for delays τ in seconds."""
    return 0.5 * (1.0 + np.cos(2.0 * np.pi * shift * np.asarray(delays) * NS_PER_S))


def _transfer_point(params, pulse, static, point):
    omega_p, factor = point
    effective = pulse.model_copy(update={"phi_tilde": factor * pulse.phi_tilde, "omega_p": omega_p})
    shift = fourier_coefficients(params, effective, 2).omega_bar - static
    recovered = excursion_from_shift(params, pulse.phi_bar, omega_p, shift) / pulse.phi_tilde
    return shift, SummaryRow(x=omega_p, value=recovered, uncertainty=abs(recovered - factor), analytic=factor)


def run_transfer_calibration(cfg: ExperimentConfig, transfer_table: TransferTable, workers: int = 1,
                             progress: bool = False) -> SweepGrid:
    """Effective amplitudes through T(ω_p), their dc shifts and the recovered T."""
    _require_axis(cfg, "omega_p")
    index = _driven_index(cfg)
    params = (cfg.system.q1, cfg.system.q2)[index]
    pulse = cfg.pulses[index]
    if pulse.phi_tilde <= 0:
        raise ConfigError("transfer calibration needs a programmed phi_tilde > 0")
    frequencies = axis_values(cfg)
    factors = [transfer_factor(transfer_table, w) for w in frequencies]
    static = qubit_frequency(params, pulse.phi_bar)

    results = _map_points(partial(_transfer_point, params, pulse, static), list(zip(frequencies, factors)),
                          workers, progress, "transfer")
    shifts = [r[0] for r in results]
    summary = [r[1] for r in results]

    largest = max(abs(s) for s in shifts)
    tau_max = 3.0 / largest / NS_PER_S if largest > 0 else 1e-6
    delays = np.linspace(0.0, tau_max, cfg.sweep.samples)
    z = np.column_stack([ramsey_fringe(s, delays) for s in shifts])
    return SweepGrid(
        x_name="omega_p (GHz)",
        y_name="delay (s)",
        x=frequencies,
        y=delays,
        z=z,
        summary=tuple(summary),
        metadata={
            "driven_qubit": str(index + 1),
            "programmed_phi_tilde": repr(pulse.phi_tilde),
            "dc_shifts_ghz": " ".join(repr(float(s)) for s in shifts),
            "summary": "value = recovered T, analytic = table T",
        },
    )


# ==========================================
# 🔗 COUPLER SWEEP
# ==========================================
def _coupler_point(cfg, omega1, omega2, flux_c):
    try:
        g_tilde = coupler_mediated_coupling(omega1, omega2, cfg.coupler, flux_c)
    except ModelValidityError as exc:
        return float("nan"), SummaryRow(x=flux_c, value=float("nan"), flag=f"invalid: {exc}")
    analytic = 2.0 * abs(g_tilde)
    flag = "reference" if abs(flux_c - COUPLER_FLUX) < 0.5 * _step(cfg) else ""
    if not cfg.sweep.dynamics or analytic <= cfg.sweep.detect_floor:
        return 2.0 * g_tilde, SummaryRow(x=flux_c, value=analytic, analytic=analytic, flag=flag or "analytic")
    # Resonant two-level exchange at g = g̃.
    system = cfg.system.model_copy(update={"q2": cfg.system.q1, "levels": 2, "g": g_tilde})
    static = cfg.pulses[0].model_copy(update={"phi_tilde": 0.0, "omega_p": 0.0})
    t_final = cfg.sweep.t_final or PERIODS_PER_WINDOW / analytic / NS_PER_S
    _, _, fit = _measure(system, static, static, t_final, cfg.sweep.dt, cfg.sweep.samples)
    if fit is None:
        return 2.0 * g_tilde, SummaryRow(x=flux_c, value=0.0, analytic=analytic, flag="no-oscillation")
    return 2.0 * g_tilde, SummaryRow(x=flux_c, value=fit.frequency, uncertainty=fit.residual, analytic=analytic,
                                     flag=flag)


def _step(cfg: ExperimentConfig) -> float:
    return abs(cfg.sweep.stop - cfg.sweep.start) / max(cfg.sweep.points - 1, 1)


def run_coupler_sweep(cfg: ExperimentConfig, workers: int = 1, progress: bool = False) -> SweepGrid:
    """Static coupling 2g̃ through the tunable coupler versus coupler flux."""
    _require_axis(cfg, "flux_c")
    if cfg.coupler is None:
        raise ConfigError("coupler sweep needs a [coupler] block")
    omega1 = qubit_frequency(cfg.system.q1, cfg.pulses[0].phi_bar)
    omega2 = qubit_frequency(cfg.system.q2, cfg.pulses[1].phi_bar)
    fluxes = axis_values(cfg)
    results = _map_points(partial(_coupler_point, cfg, omega1, omega2), fluxes, workers, progress, "coupler sweep")

    metadata = {"omega1_ghz": repr(omega1), "omega2_ghz": repr(omega2), "reference_2g_ghz": repr(REFERENCE_2G),
                "z": "signed 2g (GHz)"}
    try:
        reference = 2.0 * abs(coupler_mediated_coupling(omega1, omega2, cfg.coupler, COUPLER_FLUX))
        metadata["reference_model_2g_ghz"] = repr(reference)
        metadata["reference_relative_deviation"] = repr(reference / REFERENCE_2G - 1.0)
    except ModelValidityError as exc:
        metadata["reference_model_2g_ghz"] = f"invalid: {exc}"
    try:
        metadata["zero_coupling_flux"] = repr(find_zero_coupling_flux(omega1, omega2, cfg.coupler))
    except (NoZeroError, ModelValidityError):
        metadata["zero_coupling_flux"] = "none"
    return SweepGrid(
        x_name="flux_c (Phi0)",
        y_name="row",
        x=fluxes,
        y=np.array([0.0]),
        z=np.array([[r[0] for r in results]]),
        summary=tuple(r[1] for r in results),
        metadata=metadata,
    )


# ==========================================
# 📐 TAYLOR VERSUS FOURIER
# ==========================================
def run_taylor_fourier(cfg: ExperimentConfig, orders=range(1, 11), pairs=TAYLOR_FOURIER_PAIRS,
                       progress: bool = False) -> SweepGrid:
    """Average deviation of truncated Taylor and Fourier series on fixed pulse pairs."""
    params = cfg.system.q1
    omega_p = cfg.pulses[0].omega_p or 0.1
    orders = list(orders)
    rows, labels = [], []
    for phi_bar, phi_tilde in tqdm(pairs, desc="taylor-fourier", disable=not progress):
        pulse = FluxPulse(phi_bar=phi_bar, phi_tilde=phi_tilde, omega_p=omega_p)
        table = taylor_fourier_table(params, pulse, orders)
        rows.append([r["taylor"] for r in table])
        rows.append([r["fourier"] for r in table])
        labels += [f"taylor({phi_bar:g},{phi_tilde:g})", f"fourier({phi_bar:g},{phi_tilde:g})"]
    z = np.array(rows)
    summary = tuple(
        SummaryRow(x=float(order), value=float(z[0, i]), analytic=float(z[1, i]), flag="sweet taylor/fourier")
        for i, order in enumerate(orders)
    )
    return SweepGrid(
        x_name="order",
        y_name="row",
        x=np.array(orders, dtype=float),
        y=np.arange(len(rows), dtype=float),
        z=z,
        summary=summary,
        metadata={"rows": ";".join(labels), "omega_p_ghz": repr(omega_p), "z": "mean |deviation| (GHz)"},
    )
