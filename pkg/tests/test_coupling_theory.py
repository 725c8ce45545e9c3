import math

import numpy as np
import pytest
from scipy import special

from phasemod.constants import CouplerParams, FluxPulse, TransmonParams
from phasemod.coupling_theory import (
    bessel_argument_a,
    coupler_mediated_coupling,
    dephasing_rate,
    effective_coupling_single,
    effective_drive_frequency,
    find_zero_coupling_flux,
    jitter_fluctuation,
    phase_coupling,
    phase_sensitivity,
    resonant_drive_frequency,
    sideband_stark_shift,
)
from phasemod.errors import (
    DegenerateDriveError,
    DomainError,
    ModelValidityError,
    NoZeroError,
    ResonanceMismatchError,
)

G = 0.0105
OMEGA1, OMEGA2 = 5.477, 5.401


def device_coupler(e_j=13.40):
    return CouplerParams(coupler_params=TransmonParams(e_c=0.184, e_j1=e_j, e_j2=e_j, anharmonicity=-0.184))


@pytest.mark.parametrize("ratio", [0.2, 0.5, 1.0, 2.5])
@pytest.mark.parametrize("n", [0, 1, 2, -1])
def test_single_drive_coupling(ratio, n):
    assert effective_coupling_single(G, ratio * 0.15, 0.15, n) == pytest.approx(G * special.jv(n, ratio), abs=1e-15)


def test_single_drive_needs_frequency():
    with pytest.raises(DegenerateDriveError):
        effective_coupling_single(G, 0.05, 0.0, 1)


@pytest.mark.parametrize(
    "dphi, expected",
    [
        (0.0, 0.2),
        (math.pi, 0.8),
    ],
)
def test_argument_extremes(dphi, expected):
    assert abs(bessel_argument_a(0.5, 0.3, 1.0, dphi)) == pytest.approx(expected, abs=1e-12)


def test_argument_stays_in_range():
    dphis = np.linspace(0.0, 2 * math.pi, 25)
    values = np.abs([bessel_argument_a(0.075, 0.045, 0.15, d) for d in dphis])
    assert np.all(values >= 0.2 - 1e-9)
    assert np.all(values <= 0.8 + 1e-9)


def test_argument_rejects_negative_excursion():
    with pytest.raises(DomainError):
        bessel_argument_a(-0.1, 0.1, 0.2, 0.0)


def test_cancellation_and_parametric_resonance():
    assert phase_coupling(G, 0.05, 0.05, 0.1, 0.0, 1).magnitude == 0.0
    assert phase_coupling(G, 0.05, 0.05, 0.1, 0.0, 0).magnitude == pytest.approx(G)


def test_phase_coupling_magnitude():
    coupling = phase_coupling(G, 0.075, 0.045, 0.15, 2.0, 1)
    argument = bessel_argument_a(0.075, 0.045, 0.15, 2.0)
    assert coupling.magnitude == pytest.approx(G * special.jv(1, argument), abs=1e-15)
    assert coupling.strength == pytest.approx(2 * G * abs(special.jv(1, argument)), abs=1e-15)
    assert coupling.drive_frequency == 0.15


@pytest.mark.parametrize("phi_p1, dphi", [(0.0, 0.7), (0.4, 2.2), (-1.1, 4.0), (2.5, 0.0)])
def test_interaction_phase_identity(phi_p1, dphi):
    """a1·sin(x + φ1) − a2·sin(x + φ2) equals A·sin(x + φ_int − π) for n = 1."""
    eps1, eps2, omega = 0.06, 0.035, 0.15
    coupling = phase_coupling(G, eps1, eps2, omega, dphi, 1, phi_p1=phi_p1)
    x = np.linspace(0.0, 2 * math.pi, 17)
    lhs = eps1 / omega * np.sin(x + phi_p1) - eps2 / omega * np.sin(x + phi_p1 + dphi)
    rhs = coupling.argument_a * np.sin(x + coupling.interaction_phase - math.pi)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)


def test_single_drive_phase():
    coupling = phase_coupling(G, 0.05, 0.0, 0.1, 0.0, 1, phi_p1=0.3)
    assert coupling.interaction_phase == pytest.approx(0.3 - math.pi)
    assert coupling.prefactor_phase == pytest.approx(0.5 * math.sin(0.3))


def test_negative_excursion_is_a_phase_flip():
    flipped = phase_coupling(G, -0.05, 0.0, 0.1, 0.0, 1)
    shifted = phase_coupling(G, 0.05, 0.0, 0.1, 0.0, 1, phi_p1=math.pi)
    assert flipped.magnitude == pytest.approx(shifted.magnitude)
    assert flipped.interaction_phase == pytest.approx(shifted.interaction_phase)


def test_sweet_spot_doubles_drive():
    assert effective_drive_frequency((0.05, 0.1), (True, False)) == pytest.approx(0.1)
    with pytest.raises(ResonanceMismatchError):
        effective_drive_frequency((0.05, 0.05), (True, False))
    with pytest.raises(DegenerateDriveError):
        effective_drive_frequency(0.0)


def test_phase_sensitivity_matches_finite_difference(rng):
    step = 1e-6
    for _ in range(10):
        eps1, eps2 = rng.uniform(0.02, 0.06, size=2)
        omega = rng.uniform(0.15, 0.3)
        dphi = rng.uniform(0.3, 2.8)
        n = int(rng.integers(0, 3))

        def coupling(d):
            return phase_coupling(G, eps1, eps2, omega, d, n).magnitude

        numeric = abs(coupling(dphi + step) - coupling(dphi - step)) / (2 * step)
        assert phase_sensitivity(G, eps1, eps2, omega, dphi, n) == pytest.approx(numeric, rel=1e-6)


def test_jitter_arithmetic():
    assert jitter_fluctuation(0.022, 0.003) == pytest.approx(6.6e-5, rel=1e-12)


def test_dephasing_rate(q1_params):
    pulse = FluxPulse(phi_bar=0.1, phi_tilde=0.05, omega_p=0.1)
    assert dephasing_rate(0.1, q1_params, pulse, 0.0) == 0.0
    rate = dephasing_rate(0.1, q1_params, pulse, 1e-3)
    assert rate > 0
    assert dephasing_rate(0.2, q1_params, pulse, 1e-3) == pytest.approx(2 * rate)
    with pytest.raises(DomainError):
        dephasing_rate(0.1, q1_params, pulse, -1.0)


def test_device_coupler_reference_coupling():
    g_tilde = coupler_mediated_coupling(OMEGA1, OMEGA2, device_coupler())
    assert g_tilde < 0
    assert 2 * abs(g_tilde) == pytest.approx(0.021, rel=0.01)


def test_coupler_below_qubits_is_invalid():
    with pytest.raises(ModelValidityError):
        coupler_mediated_coupling(OMEGA1, OMEGA2, device_coupler(), 0.3)


def test_device_coupler_has_no_zero():
    with pytest.raises(NoZeroError):
        find_zero_coupling_flux(OMEGA1, OMEGA2, device_coupler())


def test_zero_coupling_flux():
    coupler = device_coupler(e_j=18.52)
    assert coupler_mediated_coupling(OMEGA1, OMEGA2, coupler, 0.0) > 0
    flux = find_zero_coupling_flux(OMEGA1, OMEGA2, coupler)
    assert 0.0 < flux < 0.3
    assert abs(coupler_mediated_coupling(OMEGA1, OMEGA2, coupler, flux)) < 1e-6


def test_stark_shift_limits():
    assert sideband_stark_shift(G, 0.0, 0.15, 0) == 0.0
    assert sideband_stark_shift(G, 0.7, 0.15, 0) == pytest.approx(0.0, abs=1e-18)
    assert sideband_stark_shift(G, 0.0, 0.15, 1) == pytest.approx(-(G**2) / 0.15)


def test_resonant_drive_frequency_solves_dressed_condition():
    delta, eps1, eps2, dphi = -0.15, 0.075, 0.03, 1.2
    omega = resonant_drive_frequency(delta, G, 1, eps1, eps2, dphi)
    argument = bessel_argument_a(eps1, eps2, omega, dphi)
    assert delta + omega == pytest.approx(-2 * sideband_stark_shift(G, argument, omega, 1), abs=1e-12)
    assert abs(omega - 0.15) < 0.01


def test_resonant_drive_frequency_errors():
    with pytest.raises(DomainError):
        resonant_drive_frequency(-0.15, G, 0, 0.05)
    with pytest.raises(ResonanceMismatchError):
        resonant_drive_frequency(0.15, G, 1, 0.05)
