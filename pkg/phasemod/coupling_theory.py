"""Closed-form effective couplings of parametrically modulated transmons.

All couplings and frequencies are /2π in GHz. Drive ``n`` activates the sideband
Δ + n·ω = 0 with Δ = ω̄2 − ω̄1.
"""

import logging
import math

import numpy as np
from scipy import optimize

from phasemod.bessel import bessel_jn, bessel_table
from phasemod.constants import FLUX_LIMIT, TWO_PI, CouplerParams, FluxPulse, PhaseCoupling, TransmonParams
from phasemod.errors import (
    DegenerateDriveError,
    DomainError,
    ModelValidityError,
    NoZeroError,
    ConvergenceError,
    ResonanceMismatchError,
)
from phasemod.modulation_analysis import dc_component
from phasemod.transmon_model import qubit_frequency

__all__ = [
    "bessel_jn",
    "bessel_table",
    "effective_coupling_single",
    "bessel_argument_a",
    "effective_drive_frequency",
    "effective_phases",
    "phase_coupling",
    "phase_sensitivity",
    "jitter_fluctuation",
    "dephasing_rate",
    "coupler_mediated_coupling",
    "find_zero_coupling_flux",
    "sideband_stark_shift",
    "resonant_drive_frequency",
]

logger = logging.getLogger(__name__)

DISPERSIVE_RATIO = 3.0
DEPHASING_STEP = 1e-4


def _require_drive(omega_p: float) -> None:
    if omega_p <= 0:
        raise DegenerateDriveError(f"parametric drive frequency must be positive, got {omega_p!r} GHz")


def _sign(x: float) -> float:
    return -1.0 if x < 0 else 1.0


def _wrap(angle: float) -> float:
    wrapped = math.remainder(angle, TWO_PI)
    return math.pi if wrapped == -math.pi else wrapped


def effective_coupling_single(g: float, eps_p: float, omega_p: float, n: int) -> float:
    """g·J_n(ε_p/ω_p)."""
    _require_drive(omega_p)
    return g * bessel_jn(n, eps_p / omega_p)


def bessel_argument_a(eps1: float, eps2: float, omega_p: float, dphi: float) -> float:
    """Signed argument A of the dual-drive Bessel factor; sgn(0) is taken as +1."""
    _require_drive(omega_p)
    if eps1 < 0 or eps2 < 0:
        raise DomainError("excursions must be non-negative")
    a1, a2 = eps1 / omega_p, eps2 / omega_p
    radius = math.hypot(a1 - a2 * math.cos(dphi), a2 * math.sin(dphi))
    return _sign(-math.sin(dphi / 2.0)) * radius


def effective_drive_frequency(omega_p, sweet_spot: tuple[bool, bool] = (False, False)) -> float:
    """Common frequency (GHz) of the two frequency modulations; sweet-spot qubits double it."""
    pair = (omega_p, omega_p) if np.isscalar(omega_p) else tuple(omega_p)
    h1, h2 = (2 if flag else 1 for flag in sweet_spot)
    w1, w2 = h1 * float(pair[0]), h2 * float(pair[1])
    _require_drive(min(w1, w2))
    if not math.isclose(w1, w2, rel_tol=1e-9, abs_tol=1e-12):
        raise ResonanceMismatchError(
            f"effective drive frequencies differ: {w1:.9g} vs {w2:.9g} GHz", detuning=w2 - w1
        )
    return w1


def _fold_sign(eps: float, phase: float) -> tuple[float, float]:
    return (abs(eps), phase + math.pi) if eps < 0 else (eps, phase)


def effective_phases(
    eps1: float,
    eps2: float,
    dphi: float,
    sweet_spot: tuple[bool, bool] = (False, False),
    phi_p1: float = 0.0,
) -> tuple[float, float, float, float]:
    """(|ε1|, |ε2|, φ1, φ2) of the frequency modulations seen by the coupling."""
    h1, h2 = (2 if flag else 1 for flag in sweet_spot)
    e1, phi1 = _fold_sign(eps1, h1 * phi_p1)
    e2, phi2 = _fold_sign(eps2, h2 * (phi_p1 + dphi))
    return e1, e2, phi1, phi2


def phase_coupling(
    g: float,
    eps1: float,
    eps2: float,
    omega_p,
    dphi: float,
    n: int,
    sweet_spot: tuple[bool, bool] = (False, False),
    phi_p1: float = 0.0,
) -> PhaseCoupling:
    """Dual-drive coupling g·J_n(A) with the phases of its stationary matrix element.

    Drive 2 runs at phase ``phi_p1 + dphi``. A sweet-spot qubit oscillates at twice its
    drive frequency and phase. Signed excursions fold into a π phase shift.
    """
    omega = effective_drive_frequency(omega_p, sweet_spot)
    e1, e2, phi1, phi2 = effective_phases(eps1, eps2, dphi, sweet_spot, phi_p1)
    delta = phi2 - phi1
    argument = bessel_argument_a(e1, e2, omega, delta)
    x1, x2 = e1 / omega, e2 / omega

    s = _sign(argument)
    along_sin = -(x1 + x2) * math.sin(delta / 2.0)
    along_cos = (x1 - x2) * math.cos(delta / 2.0)
    offset = math.atan2(s * along_sin, s * along_cos)
    mean_phase = 0.5 * (phi1 + phi2)

    return PhaseCoupling(
        order=n,
        argument_a=argument,
        magnitude=g * bessel_jn(n, argument),
        prefactor_phase=_wrap(x1 * math.sin(phi1) - x2 * math.sin(phi2)),
        interaction_phase=_wrap(n * (mean_phase + offset + math.pi)),
        drive_frequency=omega,
    )


def phase_sensitivity(g: float, eps1: float, eps2: float, omega_p: float, dphi: float, n: int) -> float:
    """|d(g·J_n(A))/d(dphi)| in GHz per radian."""
    argument = bessel_argument_a(eps1, eps2, omega_p, dphi)
    a1, a2 = eps1 / omega_p, eps2 / omega_p
    if argument == 0.0:
        # A → 0 limit along dphi: |dA/dphi| → sqrt(a1·a2) when a1 = a2.
        limit = bessel_jn(n - 1, 0.0) - bessel_jn(n + 1, 0.0)
        return abs(0.5 * g * limit) * math.sqrt(a1 * a2)
    bessel_slope = 0.5 * (bessel_jn(n - 1, argument) - bessel_jn(n + 1, argument))
    return abs(g * bessel_slope * a1 * a2 * math.sin(dphi) / argument)


def jitter_fluctuation(sensitivity: float, jitter: float) -> float:
    return sensitivity * jitter


def dephasing_rate(lam: float, params: TransmonParams, pulse: FluxPulse, a_ac: float) -> float:
    """λ·|∂ω̄/∂Φ̃|·A_ac in 1/µs, derivative by central difference of the dc term."""
    if a_ac < 0:
        raise DomainError("a_ac must be non-negative")
    if a_ac == 0 or lam == 0:
        return 0.0
    h = DEPHASING_STEP
    low = max(pulse.phi_tilde - h, 0.0)
    high = pulse.phi_tilde + h
    slope = (dc_component(params, pulse.phi_bar, high) - dc_component(params, pulse.phi_bar, low)) / (high - low)
    return TWO_PI * 1e3 * lam * abs(slope) * a_ac


# ==========================================
# 🔗 COUPLER-MEDIATED COUPLING
# ==========================================
def _coupler_frequency(coupler: CouplerParams, flux_c: float) -> float:
    return qubit_frequency(coupler.coupler_params, flux_c)


def coupler_mediated_coupling(omega1: float, omega2: float, coupler: CouplerParams, flux_c: float | None = None) -> float:
    """Dispersive effective coupling g̃ (GHz) through a tunable coupler."""
    flux = coupler.flux_c if flux_c is None else flux_c
    omega_c = _coupler_frequency(coupler, flux)
    delta1, delta2 = omega1 - omega_c, omega2 - omega_c
    sigma1, sigma2 = omega1 + omega_c, omega2 + omega_c
    if delta1 >= 0 or delta2 >= 0:
        raise ModelValidityError(
            f"coupler at {omega_c:.4f} GHz is not above both qubits ({omega1:.4f}, {omega2:.4f} GHz)"
        )
    for g_ic, delta in ((coupler.g_1c, delta1), (coupler.g_2c, delta2)):
        if abs(delta) < DISPERSIVE_RATIO * g_ic:
            raise ModelValidityError(
                f"|Δ| = {abs(delta):.4f} GHz is within {DISPERSIVE_RATIO:g}·g = {DISPERSIVE_RATIO * g_ic:.4f} GHz"
            )
    exchange = 0.5 * coupler.g_1c * coupler.g_2c * (1 / delta1 + 1 / delta2 - 1 / sigma1 - 1 / sigma2)
    return coupler.g_12 + exchange


def _valid_flux_range(omega1: float, omega2: float, coupler: CouplerParams, points: int = 2001) -> float:
    """Largest non-negative coupler flux for which the dispersive model holds on [0, flux]."""
    grid = np.linspace(0.0, FLUX_LIMIT - 1e-3, points)
    last = None
    for flux in grid:
        try:
            coupler_mediated_coupling(omega1, omega2, coupler, flux)
        except ModelValidityError:
            break
        last = float(flux)
    if last is None:
        raise ModelValidityError("coupler is not dispersive even at its sweet spot")
    return last


def find_zero_coupling_flux(omega1: float, omega2: float, coupler: CouplerParams) -> float:
    """Coupler flux where g̃ crosses zero, bisected to 1e-6 Φ0."""
    upper = _valid_flux_range(omega1, omega2, coupler)

    def g_tilde(flux: float) -> float:
        return coupler_mediated_coupling(omega1, omega2, coupler, flux)

    g_low, g_high = g_tilde(0.0), g_tilde(upper)
    if g_low * g_high > 0:
        raise NoZeroError(
            f"g̃ keeps its sign on [0, {upper:.4f}] Φ0 ({g_low * 1e3:.3f} → {g_high * 1e3:.3f} MHz)"
        )
    root = optimize.bisect(g_tilde, 0.0, upper, xtol=1e-6)
    logger.debug("zero coupling at flux_c = %.6f Φ0", root)
    return float(root)


# ==========================================
# 🌀 SECOND-ORDER SIDEBAND SHIFT
# ==========================================
def sideband_stark_shift(g: float, argument: float, omega: float, n: int, k_max: int = 24) -> float:
    """Level shift S (GHz) of the resonant sideband from the off-resonant ones.

    Each off-resonant sideband n±k at detuning ∓k·ω pushes the pair apart; the
    dressed resonance sits at Δ + n·ω = −2S.
    """
    _require_drive(omega)
    reach = abs(n) + k_max
    table = bessel_table(reach, argument)

    def jn(order: int) -> float:
        value = table[abs(order)]
        return -value if order < 0 and order % 2 else value

    total = sum((jn(n + k) ** 2 - jn(n - k) ** 2) / k for k in range(1, k_max + 1))
    return g**2 / omega * total


def resonant_drive_frequency(
    delta: float,
    g: float,
    n: int,
    eps1: float,
    eps2: float = 0.0,
    dphi: float = 0.0,
    max_iter: int = 100,
    tol: float = 1e-13,
) -> float:
    """Effective drive frequency ω solving Δ + n·ω = −2S(ω) by fixed-point iteration.

    ``eps1``/``eps2`` are the (non-negative) excursions and ``dphi`` the effective
    relative phase, all after any sweet-spot doubling.
    """
    if n == 0:
        raise DomainError("the n = 0 resonance does not depend on the drive frequency")
    omega = -delta / n
    if omega <= 0:
        raise ResonanceMismatchError(
            f"Δ = {delta:.6g} GHz cannot be bridged by sideband n = {n}", detuning=delta
        )
    for _ in range(max_iter):
        argument = bessel_argument_a(eps1, eps2, omega, dphi)
        shift = sideband_stark_shift(g, argument, omega, n)
        updated = -(delta + 2.0 * shift) / n
        if updated <= 0:
            raise ResonanceMismatchError("Stark shift exceeds the detuning", detuning=delta)
        if abs(updated - omega) < tol:
            return updated
        omega = updated
    raise ConvergenceError(f"dressed resonance did not settle after {max_iter} iterations")
