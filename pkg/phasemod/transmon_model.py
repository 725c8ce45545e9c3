"""Flux-to-frequency map of a symmetric-SQUID transmon.

ω(Φ) = sqrt(8·E_C·E_JΣ·|cos πΦ|) − E_C, all values /2π in GHz, flux in Φ0.
"""

import logging
import math
from functools import lru_cache

import numpy as np

from phasemod.constants import FLUX_LIMIT, NS_PER_S, TWO_PI, FluxPulse, TransmonParams
from phasemod.errors import DomainError

logger = logging.getLogger(__name__)

MAX_DERIVATIVE_ORDER = 10


def _check_flux(flux) -> np.ndarray:
    flux = np.asarray(flux, dtype=float)
    if np.any(np.abs(flux) >= FLUX_LIMIT):
        worst = float(np.max(np.abs(flux)))
        raise DomainError(f"flux {worst:.6g} Φ0 is outside (-{FLUX_LIMIT}, {FLUX_LIMIT})")
    return flux


def _dispersion(params: TransmonParams, flux: np.ndarray) -> np.ndarray:
    return np.sqrt(8.0 * params.e_c * params.e_j_sum * np.abs(np.cos(np.pi * flux))) - params.e_c


def qubit_frequency(params: TransmonParams, flux):
    """0→1 transition frequency (GHz) at ``flux``; accepts scalars or arrays."""
    flux = _check_flux(flux)
    omega = _dispersion(params, flux)
    return float(omega) if omega.ndim == 0 else omega


def flux_for_frequency(params: TransmonParams, frequency: float) -> float:
    """Non-negative flux (Φ0) at which the qubit sits at ``frequency``."""
    top = qubit_frequency(params, 0.0)
    if frequency > top:
        raise DomainError(f"{frequency:.6g} GHz is above the sweet-spot maximum {top:.6g} GHz")
    cos_value = (frequency + params.e_c) ** 2 / (8.0 * params.e_c * params.e_j_sum)
    flux = math.acos(min(cos_value, 1.0)) / math.pi
    if frequency <= -params.e_c or flux >= FLUX_LIMIT:
        raise DomainError(f"{frequency:.6g} GHz is not reachable below half flux quantum")
    return flux


def flux_trace(pulse: FluxPulse, t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    return pulse.phi_bar + pulse.phi_tilde * np.cos(TWO_PI * pulse.omega_p * NS_PER_S * t + pulse.phi_p)


def frequency_trace(params: TransmonParams, pulse: FluxPulse, t_grid) -> np.ndarray:
    """ω(Φ(t)) in GHz sampled on ``t_grid`` (seconds)."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1:
        raise DomainError("t_grid must be one-dimensional")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    flux = flux_trace(pulse, t)
    outside = np.abs(flux) >= FLUX_LIMIT
    if np.any(outside):
        first = int(np.argmax(outside))
        raise DomainError(f"flux {flux[first]:.6g} Φ0 leaves the domain at t = {t[first]:.6g} s")
    return _dispersion(params, flux)


# ==========================================
# 📐 FLUX DERIVATIVES
# ==========================================
@lru_cache(maxsize=None)
def _central_weights(order: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Weights of the narrowest central stencil for the ``order``-th derivative."""
    half = (order + 1) // 2
    offsets = np.arange(-half, half + 1)
    vandermonde = np.vander(offsets, increasing=True).T.astype(float)
    rhs = np.zeros(offsets.size)
    rhs[order] = float(math.factorial(order))
    weights = np.linalg.solve(vandermonde, rhs)
    return tuple(int(o) for o in offsets), tuple(float(w) for w in weights)


def derivative_step(order: int) -> float:
    """Base step in Φ0; grows with order so the stencil stays above rounding noise."""
    # 1e-4 suits order 1; an order-k stencil divides by h^k, so higher orders widen h.
    return max(1e-4, 10.0 ** (-4.0 + 0.25 * (order - 1)))


def dfreq_dflux(params: TransmonParams, flux: float, order: int) -> float:
    """``order``-th flux derivative of ``qubit_frequency`` (GHz / Φ0^order)."""
    if not 1 <= order <= MAX_DERIVATIVE_ORDER:
        raise DomainError(f"derivative order {order} outside 1..{MAX_DERIVATIVE_ORDER}")
    offsets, weights = _central_weights(order)
    h = derivative_step(order)
    reach = abs(flux) + 2 * h * max(offsets)
    if reach >= FLUX_LIMIT:
        raise DomainError(f"stencil around flux {flux:.6g} reaches {reach:.6g} Φ0")

    def stencil(step: float) -> float:
        points = flux + step * np.asarray(offsets, dtype=float)
        values = _dispersion(params, points)
        return float(np.dot(weights, values)) / step**order

    # One Richardson level; central stencils carry even error terms.
    return (4.0 * stencil(h) - stencil(2 * h)) / 3.0
