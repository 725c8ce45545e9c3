"""Time-domain evolution of two flux-modulated Duffing transmons.

Both integrators share one fixed-step RK4 kernel acting on
dψ/dt = −i·2π·(D(t)·ψ + u(t)·C·(u*(t)·ψ)) with times in ns and energies in GHz:
``evolve`` uses the static parking frame (u = e^{iEt}, D = instantaneous detuning),
``evolve_interaction_picture`` the full phase frame (u = e^{iΘ(t)}, D = 0).
"""

import logging
import math

import numpy as np
from scipy import integrate, optimize

from phasemod.constants import NS_PER_S, TWO_PI, CosineFit, FluxPulse, TimeTrace, TwoQubitSystem
from phasemod.errors import DomainError, NoOscillationError, StepSizeError
from phasemod.transmon_model import frequency_trace, qubit_frequency

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-6
BLOCK_STEPS = 4096
FIT_MAX_POINTS = 4000
STEPS_PER_CYCLE = 50
SPAN_SAMPLES = 256
SINGLE_EXCITATION = ("01", "10")
DOUBLE_EXCITATION = ("11", "20", "02")


# ==========================================
# 🧱 BASIS AND HAMILTONIAN
# ==========================================
def basis_labels(levels: int) -> tuple[str, ...]:
    return tuple(f"{i1}{i2}" for i1 in range(levels) for i2 in range(levels))


def _occupations(levels: int) -> tuple[np.ndarray, np.ndarray]:
    index = np.arange(levels * levels)
    return index // levels, index % levels


def _lowering(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels)), k=1)


def coupling_matrix(system: TwoQubitSystem) -> np.ndarray:
    """g·(b1 + b1†)(b2 + b2†) in the product basis (GHz)."""
    b = _lowering(system.levels)
    x = b + b.T
    return system.g * np.kron(x, x)


def _diagonal_energies(system: TwoQubitSystem, omega1: float, omega2: float) -> np.ndarray:
    n1, n2 = _occupations(system.levels)
    return (
        omega1 * n1 + 0.5 * system.alpha1 * n1 * (n1 - 1)
        + omega2 * n2 + 0.5 * system.alpha2 * n2 * (n2 - 1)
    )


def hamiltonian_at(system: TwoQubitSystem, omega1_t: float, omega2_t: float) -> np.ndarray:
    """Duffing Hamiltonian (GHz) for instantaneous qubit frequencies."""
    return np.diag(_diagonal_energies(system, omega1_t, omega2_t)) + coupling_matrix(system)


def initial_state(system: TwoQubitSystem, psi0) -> np.ndarray:
    """Basis label such as ``"10"`` or a state vector, returned normalised."""
    dim = system.levels**2
    if isinstance(psi0, str):
        labels = basis_labels(system.levels)
        if psi0 not in labels:
            raise DomainError(f"unknown basis label {psi0!r} for {system.levels} levels")
        state = np.zeros(dim, dtype=complex)
        state[labels.index(psi0)] = 1.0
        return state
    state = np.asarray(psi0, dtype=complex).ravel()
    if state.size != dim:
        raise DomainError(f"state has {state.size} components, expected {dim}")
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise DomainError(f"initial state is not normalised (norm {norm:.8f})")
    return state


# ==========================================
# ⏱️ RK4 KERNEL
# ==========================================
def _time_grid(t_final: float, dt: float) -> tuple[int, float]:
    if t_final <= 0 or dt <= 0:
        raise DomainError("t_final and dt must be positive")
    steps = max(1, math.ceil(t_final / dt - 1e-9))
    return steps, t_final * NS_PER_S / steps


def _rk4(coupling, frame, psi, steps: int, h: float, record) -> np.ndarray:
    """Advance ``psi`` over ``steps`` steps of size ``h`` ns.

    ``frame(start, stop)`` returns (D, U) sampled on half-step indices start..stop-1,
    ``record(step, psi)`` is called after every step.
    """
    half = 0.5 * h
    scale = -1j * TWO_PI
    for block_start in range(0, steps, BLOCK_STEPS):
        block_steps = min(BLOCK_STEPS, steps - block_start)
        diag, phases = frame(2 * block_start, 2 * (block_start + block_steps) + 1)
        conj = phases.conj()

        def rate(j, state):
            return scale * (diag[j] * state + phases[j] * (coupling @ (conj[j] * state)))

        for local in range(block_steps):
            j = 2 * local
            k1 = rate(j, psi)
            k2 = rate(j + 1, psi + half * k1)
            k3 = rate(j + 1, psi + half * k2)
            k4 = rate(j + 2, psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            record(block_start + local + 1, psi)
    return psi


def _sample_steps(steps: int, samples: int | None) -> np.ndarray:
    if samples is None or samples >= steps + 1:
        return np.arange(steps + 1)
    return np.unique(np.round(np.linspace(0, steps, samples)).astype(int))


class _Recorder:
    def __init__(self, keep: np.ndarray, width: int):
        self.keep = keep
        self.rows = np.zeros((keep.size, width))
        self.cursor = 0

    def __call__(self, step: int, psi: np.ndarray) -> None:
        if self.cursor < self.keep.size and self.keep[self.cursor] == step:
            self.rows[self.cursor] = np.abs(psi) ** 2
            self.cursor += 1


def _trace(system, labels_used, indices, recorder, steps, h, final_state) -> TimeTrace:
    populations_used = recorder.rows
    norm = populations_used.sum(axis=1)
    drift = float(np.max(np.abs(norm - 1.0)))
    if drift > NORM_TOLERANCE:
        raise StepSizeError(f"norm drift {drift:.2e} exceeds {NORM_TOLERANCE:g}; reduce dt below {h * 1e-9:.3g} s")
    labels = basis_labels(system.levels)
    populations = {label: np.zeros(recorder.keep.size) for label in labels}
    for column, index in enumerate(indices):
        populations[labels[index]] = populations_used[:, column]
    return TimeTrace(
        times=recorder.keep * h / NS_PER_S,
        populations=populations,
        norm=norm,
        final_state=final_state,
        labels=tuple(labels[i] for i in indices) if labels_used is None else labels_used,
    )


def _closed_block(system: TwoQubitSystem, state: np.ndarray) -> np.ndarray:
    """Indices to integrate: the |01⟩, |10⟩ block when it is closed and holds the state."""
    labels = basis_labels(system.levels)
    block = [labels.index(label) for label in SINGLE_EXCITATION]
    outside = np.delete(np.arange(state.size), block)
    if system.levels == 2 and np.all(state[outside] == 0):
        return np.array(block)
    return np.arange(state.size)


def _span(params, pulse: FluxPulse, park: float) -> float:
    """Largest |ω(t) − ω(Φ̄)| over one drive period (GHz)."""
    if pulse.phi_tilde == 0 or pulse.omega_p <= 0:
        return 0.0
    t = np.linspace(0.0, 1.0 / (pulse.omega_p * NS_PER_S), SPAN_SAMPLES, endpoint=False)
    return float(np.max(np.abs(frequency_trace(params, pulse, t) - park)))


def stable_step(system: TwoQubitSystem, pulse1: FluxPulse, pulse2: FluxPulse, psi0="10") -> float:
    """Largest RK4 step (s) resolving the fastest rotating-frame phase 50 times.

    The fastest phase is the widest parking-frame gap between coupled states of the
    integrated block, widened by the modulation span of the occupied levels.
    """
    state = initial_state(system, psi0)
    indices = _closed_block(system, state)
    park1 = qubit_frequency(system.q1, pulse1.phi_bar)
    park2 = qubit_frequency(system.q2, pulse2.phi_bar)
    energies = _diagonal_energies(system, park1, park2)[indices]
    coupled = coupling_matrix(system)[np.ix_(indices, indices)] != 0
    gaps = np.abs(energies[:, None] - energies[None, :])[coupled]
    widest = float(gaps.max()) if gaps.size else 0.0
    top = system.levels - 1
    widest += top * (_span(system.q1, pulse1, park1) + _span(system.q2, pulse2, park2))
    if widest == 0.0:
        return math.inf
    return 1.0 / (STEPS_PER_CYCLE * widest * NS_PER_S)


def evolve(
    system: TwoQubitSystem,
    pulse1: FluxPulse,
    pulse2: FluxPulse,
    psi0,
    t_final: float,
    dt: float,
    samples: int | None = None,
) -> TimeTrace:
    """Schrödinger evolution of the full Duffing pair (times in seconds)."""
    state = initial_state(system, psi0)
    steps, h = _time_grid(t_final, dt)
    indices = _closed_block(system, state)

    park1 = qubit_frequency(system.q1, pulse1.phi_bar)
    park2 = qubit_frequency(system.q2, pulse2.phi_bar)
    energies = _diagonal_energies(system, park1, park2)[indices]
    coupling = coupling_matrix(system)[np.ix_(indices, indices)]
    n1, n2 = (occ[indices] for occ in _occupations(system.levels))

    def frame(start: int, stop: int):
        t_ns = np.arange(start, stop) * (0.5 * h)
        t_s = t_ns / NS_PER_S
        shift1 = frequency_trace(system.q1, pulse1, t_s) - park1
        shift2 = frequency_trace(system.q2, pulse2, t_s) - park2
        diag = np.outer(shift1, n1) + np.outer(shift2, n2)
        phases = np.exp(1j * TWO_PI * np.outer(t_ns, energies))
        return diag, phases

    keep = _sample_steps(steps, samples)
    recorder = _Recorder(keep, indices.size)
    psi = state[indices].copy()
    recorder(0, psi)
    psi = _rk4(coupling, frame, psi, steps, h, recorder)

    final = np.zeros(system.levels**2, dtype=complex)
    final[indices] = np.exp(-1j * TWO_PI * energies * steps * h) * psi
    logger.debug("evolve: %d RK4 steps of %.4g ns on %d states", steps, h, indices.size)
    return _trace(system, None, indices, recorder, steps, h, final)


def evolve_interaction_picture(
    system: TwoQubitSystem,
    pulse1: FluxPulse,
    pulse2: FluxPulse,
    psi0,
    t_final: float,
    dt: float,
    samples: int | None = None,
    include_double: bool = False,
) -> TimeTrace:
    """Evolution under H_I·e^{i(Θ_a − Θ_b)} on the excitation-conserving blocks.

    Θ_a = Σ_i F_i·n_i + A_i·n_i(n_i − 1)/2 with F_i = 2π∫ω_i dt accumulated by the
    trapezoidal rule and A_i = 2π·α_i·t.
    """
    labels_used = SINGLE_EXCITATION + (DOUBLE_EXCITATION if include_double else ())
    if include_double and system.levels < 3:
        raise DomainError("the |11⟩, |20⟩, |02⟩ block needs at least 3 levels")
    labels = basis_labels(system.levels)
    indices = np.array([labels.index(label) for label in labels_used])
    state = initial_state(system, psi0)
    if np.linalg.norm(np.delete(state, indices)) > NORM_TOLERANCE:
        raise DomainError(f"initial state has weight outside {labels_used}")
    steps, h = _time_grid(t_final, dt)

    t_ns = np.arange(2 * steps + 1) * (0.5 * h)
    t_s = t_ns / NS_PER_S
    f1 = TWO_PI * integrate.cumulative_trapezoid(frequency_trace(system.q1, pulse1, t_s), t_ns, initial=0.0)
    f2 = TWO_PI * integrate.cumulative_trapezoid(frequency_trace(system.q2, pulse2, t_s), t_ns, initial=0.0)
    a1, a2 = TWO_PI * system.alpha1 * t_ns, TWO_PI * system.alpha2 * t_ns
    n1, n2 = (occ[indices] for occ in _occupations(system.levels))
    theta = (
        np.outer(f1, n1) + np.outer(a1, 0.5 * n1 * (n1 - 1))
        + np.outer(f2, n2) + np.outer(a2, 0.5 * n2 * (n2 - 1))
    )
    coupling = coupling_matrix(system)[np.ix_(indices, indices)]
    zeros = np.zeros((BLOCK_STEPS * 2 + 1, indices.size))

    def frame(start: int, stop: int):
        return zeros[: stop - start], np.exp(1j * theta[start:stop])

    keep = _sample_steps(steps, samples)
    recorder = _Recorder(keep, indices.size)
    psi = state[indices].copy()
    recorder(0, psi)
    psi = _rk4(coupling, frame, psi, steps, h, recorder)

    final = np.zeros(system.levels**2, dtype=complex)
    final[indices] = np.exp(-1j * theta[-1]) * psi
    return _trace(system, labels_used, indices, recorder, steps, h, final)


# ==========================================
# 📈 OSCILLATION FIT
# ==========================================
def _model(params: np.ndarray, t: np.ndarray) -> np.ndarray:
    offset, amplitude, frequency, phase, rate = params
    return offset + amplitude * np.exp(-rate * t) * np.cos(TWO_PI * frequency * t + phase)


def fit_damped_cosine(
    times,
    values,
    max_frequency: float | None = None,
    min_amplitude: float = 0.02,
) -> CosineFit:
    """Fit B + C·e^{−t/τ}·cos(2πft + θ) to a sampled trace (times in seconds).

    The starting frequency is the strongest zero-padded DFT peak below
    ``max_frequency`` (GHz); least squares then refines all five parameters.
    """
    t = np.asarray(times, dtype=float) * NS_PER_S
    y = np.asarray(values, dtype=float)
    if t.size != y.size or t.size < 8:
        raise DomainError("fit needs matching times/values with at least 8 samples")
    stride = max(1, math.ceil(t.size / FIT_MAX_POINTS))
    t, y = t[::stride], y[::stride]
    t = t - t[0]
    span = t[-1]

    centred = y - y.mean()
    if 0.5 * (centred.max() - centred.min()) < min_amplitude:
        raise NoOscillationError(f"trace contrast below {min_amplitude:g}")
    padded = 8 * t.size
    spectrum = np.abs(np.fft.rfft(centred, n=padded))
    freqs = np.fft.rfftfreq(padded, d=t[1] - t[0])
    band = freqs >= 0.5 / span
    if max_frequency is not None:
        band &= freqs <= max_frequency
    if not np.any(band):
        raise NoOscillationError("no frequency bins in the fit band")
    peak_index = np.flatnonzero(band)[np.argmax(spectrum[band])]
    floor = float(np.median(spectrum[band]))
    if spectrum[peak_index] <= 3.0 * floor:
        raise NoOscillationError(f"spectral peak {spectrum[peak_index]:.3g} is within 3x the floor {floor:.3g}")

    f0 = float(freqs[peak_index])
    projection = np.sum(centred * np.exp(-1j * TWO_PI * f0 * t))
    guess = np.array([y.mean(), 2.0 * abs(projection) / t.size, f0, float(np.angle(projection)), 0.0])
    lower = [-np.inf, 0.0, 0.0, -np.inf, 0.0]
    upper = [np.inf, np.inf, np.inf, np.inf, np.inf]
    result = optimize.least_squares(
        lambda p: _model(p, t) - y, guess, bounds=(lower, upper), method="trf",
        x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=2000,
    )
    offset, amplitude, frequency, phase, rate = result.x
    if amplitude < min_amplitude:
        raise NoOscillationError(f"fitted amplitude {amplitude:.3g} below {min_amplitude:g}")
    residual = float(np.sqrt(np.mean(result.fun**2)))
    return CosineFit(
        frequency=float(frequency),
        decay=math.inf if rate <= 0 else 1.0 / (rate * NS_PER_S),
        amplitude=float(amplitude),
        offset=float(offset),
        phase=float(math.remainder(phase, TWO_PI)),
        residual=residual,
    )
