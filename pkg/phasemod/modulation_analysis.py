"""Fourier and Taylor decompositions of the modulated qubit frequency.

With θ = 2π·ω_p·t + φ_p the trace ω(Φ̄ + Φ̃·cos θ) is even in θ, so only cosine
harmonics appear:  ω(t) = Σ_k f_k·cos(kθ),
f_k = 1/(π(1 + δ_k0)) ∫_0^{2π} cos(kθ)·ω(Φ̄ + Φ̃·cos θ) dθ.
"""

import logging
import math
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from phasemod.bessel import bessel_table
from phasemod.constants import (
    FLUX_LIMIT,
    NS_PER_S,
    SWEET_SPOT_TOLERANCE,
    FluxPulse,
    ModulationProfile,
    SidebandSpectrum,
    TransmonParams,
)
from phasemod.errors import DegenerateDriveError, DomainError, NoSolutionError, NumericError
from phasemod.transmon_model import dfreq_dflux, frequency_trace, qubit_frequency

logger = logging.getLogger(__name__)

QUADRATURE_START = 4096
QUADRATURE_MAX = 2**20
QUADRATURE_TOL = 1e-9
DEVIATION_POINTS = 2048
EDGE_MARGINS = (1e-2, 1e-4, 1e-6)


def _harmonics_on_grid(params: TransmonParams, phi_bar: float, phi_tilde: float, k_max: int, points: int) -> np.ndarray:
    theta = np.linspace(0.0, 2.0 * np.pi, points + 1)
    omega = qubit_frequency(params, phi_bar + phi_tilde * np.cos(theta))
    ks = np.arange(k_max + 1)[:, None]
    coeffs = integrate.simpson(np.cos(ks * theta) * omega, x=theta, axis=-1) / np.pi
    coeffs[0] *= 0.5
    return coeffs


def _coefficients(params: TransmonParams, phi_bar: float, phi_tilde: float, k_max: int) -> np.ndarray:
    if abs(phi_bar) + phi_tilde >= FLUX_LIMIT:
        raise DomainError(f"|phi_bar| + phi_tilde = {abs(phi_bar) + phi_tilde:.6g} leaves the flux domain")
    if phi_tilde == 0.0:
        coeffs = np.zeros(k_max + 1)
        coeffs[0] = qubit_frequency(params, phi_bar)
        return coeffs
    points = QUADRATURE_START
    previous = _harmonics_on_grid(params, phi_bar, phi_tilde, k_max, points)
    while points < QUADRATURE_MAX:
        points *= 2
        current = _harmonics_on_grid(params, phi_bar, phi_tilde, k_max, points)
        change = float(np.max(np.abs(current - previous)))
        if change < QUADRATURE_TOL:
            logger.debug("Fourier quadrature converged at %d points (change %.2e)", points, change)
            return current
        previous = current
    raise NumericError(f"Fourier quadrature did not converge below {QUADRATURE_TOL:g} GHz with {points} points")


def _base_harmonic(phi_bar: float) -> int:
    return 2 if abs(phi_bar) < SWEET_SPOT_TOLERANCE else 1


def _profile(params: TransmonParams, pulse: FluxPulse, coeffs: np.ndarray, base: int) -> ModulationProfile:
    fourier = tuple((k, float(c)) for k, c in enumerate(coeffs))
    excursion = abs(float(coeffs[base])) if base < len(coeffs) else 0.0
    return ModulationProfile(
        omega_bar=float(coeffs[0]),
        excursion=excursion,
        fourier=fourier,
        base_harmonic=base,
        dc_shift=float(coeffs[0]) - qubit_frequency(params, pulse.phi_bar),
        omega_p=pulse.omega_p,
        phi_p=pulse.phi_p,
    )


def fourier_coefficients(params: TransmonParams, pulse: FluxPulse, k_max: int) -> ModulationProfile:
    """Harmonics f_0..f_{k_max} (GHz) of ω(t) by quadrature over one drive period."""
    if pulse.omega_p <= 0 and pulse.phi_tilde > 0:
        raise DegenerateDriveError("fourier_coefficients needs omega_p > 0")
    if k_max < 2:
        raise DomainError("k_max must be at least 2")
    coeffs = _coefficients(params, pulse.phi_bar, pulse.phi_tilde, k_max)
    return _profile(params, pulse, coeffs, _base_harmonic(pulse.phi_bar))


def dc_component(params: TransmonParams, phi_bar: float, phi_tilde: float) -> float:
    """Time-averaged frequency ω̄ (GHz); independent of ω_p and φ_p."""
    return float(_coefficients(params, phi_bar, phi_tilde, 2)[0])


def taylor_harmonics(params: TransmonParams, pulse: FluxPulse, order: int) -> ModulationProfile:
    """Power-reduced Taylor series of ω(Φ̄ + Φ̃ cos θ) truncated at ``order``.

    cos^n θ = 2^{1-n} Σ_{k<n/2} C(n,k) cos((n−2k)θ) + [n even] 2^{-n} C(n, n/2),
    so the order-n term feeds the dc part and harmonics n, n−2, ... down to 1 or 2.
    """
    if not 1 <= order <= 10:
        raise DomainError(f"Taylor order {order} outside 1..10")
    coeffs = np.zeros(order + 1)
    coeffs[0] = qubit_frequency(params, pulse.phi_bar)
    sweet = _base_harmonic(pulse.phi_bar) == 2
    for n in range(1, order + 1):
        if sweet and n % 2:
            continue  # odd derivatives vanish at a sweet spot
        term = pulse.phi_tilde**n / math.factorial(n) * dfreq_dflux(params, pulse.phi_bar, n)
        if term == 0.0:
            continue
        for k in range((n + 1) // 2):
            coeffs[n - 2 * k] += term * 2.0 ** (1 - n) * math.comb(n, k)
        if n % 2 == 0:
            coeffs[0] += term * 2.0 ** (-n) * math.comb(n, n // 2)
    if len(coeffs) < 3:
        coeffs = np.pad(coeffs, (0, 3 - len(coeffs)))
    return _profile(params, pulse, coeffs, _base_harmonic(pulse.phi_bar))


def average_deviation(
    approx: ModulationProfile | Callable[[np.ndarray], np.ndarray],
    params: TransmonParams,
    pulse: FluxPulse,
    points: int = DEVIATION_POINTS,
) -> float:
    """Mean |approx(t) − ω(t)| (GHz) over one drive period."""
    if pulse.omega_p <= 0:
        raise DegenerateDriveError("average_deviation needs omega_p > 0")
    period = 1.0 / (pulse.omega_p * NS_PER_S)
    t = np.linspace(0.0, period, max(points, 1000), endpoint=False)
    exact = frequency_trace(params, pulse, t)
    reconstruction = approx.reconstruct if isinstance(approx, ModulationProfile) else approx
    return float(np.mean(np.abs(np.asarray(reconstruction(t)) - exact)))


def truncated(profile: ModulationProfile, harmonics: int) -> ModulationProfile:
    """``profile`` keeping f_0..f_harmonics."""
    kept = tuple((k, f) for k, f in profile.fourier if k <= harmonics)
    return profile.model_copy(update={"fourier": kept})


def taylor_fourier_table(params: TransmonParams, pulse: FluxPulse, orders) -> list[dict]:
    """Average deviation of Taylor order n and of the n-harmonic Fourier series."""
    full = fourier_coefficients(params, pulse, max(max(orders), 2))
    rows = []
    for n in orders:
        rows.append({
            "order": int(n),
            "taylor": average_deviation(taylor_harmonics(params, pulse, n), params, pulse),
            "fourier": average_deviation(truncated(full, n), params, pulse),
        })
    return rows


def sideband_spectrum(profile: ModulationProfile, pulse: FluxPulse, n_max: int) -> SidebandSpectrum:
    """Peaks at ω̄ + k·h·ω_p weighted by J_k(ε/(h·ω_p))², h = base harmonic."""
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    if pulse.omega_p <= 0:
        raise DegenerateDriveError("sideband_spectrum needs omega_p > 0")
    spacing = profile.base_harmonic * pulse.omega_p
    table = bessel_table(n_max, profile.excursion / spacing)
    peaks = []
    for k in range(-n_max, n_max + 1):
        weight = float(table[abs(k)] ** 2)
        peaks.append((profile.omega_bar + k * spacing, weight))
    return SidebandSpectrum(peaks=tuple(peaks), order_range=(-n_max, n_max))


def excursion_from_shift(params: TransmonParams, phi_bar: float, omega_p: float, observed_dc_shift: float) -> float:
    """Modulation amplitude Φ̃ whose time-averaged shift equals ``observed_dc_shift``.

    ``omega_p`` does not enter ω̄; it is accepted so callers can pass a full drive spec.
    """
    if omega_p <= 0:
        raise DegenerateDriveError("excursion_from_shift needs omega_p > 0")
    if abs(observed_dc_shift) < 1e-12:
        return 0.0
    if observed_dc_shift > 0:
        raise NoSolutionError(f"a modulation cannot raise the mean frequency (shift {observed_dc_shift:.6g} GHz)")
    static = qubit_frequency(params, phi_bar)

    def residual(phi_tilde: float) -> float:
        return dc_component(params, phi_bar, phi_tilde) - static - observed_dc_shift

    # Near Φ̃ + |Φ̄| = ½ the dispersion is singular; approach the edge in steps.
    for margin in EDGE_MARGINS:
        upper = FLUX_LIMIT - abs(phi_bar) - margin
        floor = residual(upper)
        if floor <= 0:
            return float(optimize.brentq(residual, 0.0, upper, xtol=1e-10, rtol=1e-12))
    raise NoSolutionError(
        f"shift {observed_dc_shift:.6g} GHz is below the reachable minimum {floor + observed_dc_shift:.6g} GHz"
    )
