import numpy as np
import pytest

from phasemod.constants import FluxPulse
from phasemod.errors import DegenerateDriveError, DomainError, NoSolutionError
from phasemod.modulation_analysis import (
    average_deviation,
    dc_component,
    excursion_from_shift,
    fourier_coefficients,
    sideband_spectrum,
    taylor_fourier_table,
    taylor_harmonics,
    truncated,
)
from phasemod.transmon_model import dfreq_dflux, frequency_trace, qubit_frequency

SWEET_PAIR = (0.0, 0.4)
OFF_SWEET_PAIR = (0.15, 0.3)


def test_static_pulse_has_only_dc(q1_params):
    profile = fourier_coefficients(q1_params, FluxPulse(phi_bar=0.1, omega_p=0.1), 6)
    assert profile.omega_bar == qubit_frequency(q1_params, 0.1)
    assert all(f == 0.0 for k, f in profile.fourier if k > 0)
    assert profile.excursion == 0.0
    assert profile.dc_shift == 0.0


def test_sweet_spot_parity(q1_params):
    profile = fourier_coefficients(q1_params, FluxPulse(phi_bar=0.0, phi_tilde=0.2, omega_p=0.1), 9)
    assert profile.base_harmonic == 2
    assert max(abs(profile.harmonic(k)) for k in (1, 3, 5, 7, 9)) < 1e-6
    assert profile.harmonic(2) < 0
    assert profile.excursion == pytest.approx(abs(profile.harmonic(2)))
    assert profile.dc_shift < 0


def test_off_sweet_first_harmonic_follows_slope(q1_params):
    pulse = FluxPulse(phi_bar=0.25, phi_tilde=0.01, omega_p=0.15)
    profile = fourier_coefficients(q1_params, pulse, 4)
    assert profile.base_harmonic == 1
    assert profile.base_amplitude == pytest.approx(dfreq_dflux(q1_params, 0.25, 1) * 0.01, rel=2e-3)
    assert profile.base_amplitude < 0


def test_profile_reconstructs_trace(q1_params):
    pulse = FluxPulse(phi_bar=0.1, phi_tilde=0.1, omega_p=0.2, phi_p=0.7)
    profile = fourier_coefficients(q1_params, pulse, 14)
    t = np.linspace(0.0, 10e-9, 257)
    np.testing.assert_allclose(profile.reconstruct(t), frequency_trace(q1_params, pulse, t), rtol=0, atol=1e-6)
    assert average_deviation(profile, q1_params, pulse) < 1e-6


def test_dc_component_matches_profile(q1_params):
    pulse = FluxPulse(phi_bar=0.12, phi_tilde=0.08, omega_p=0.3)
    assert dc_component(q1_params, 0.12, 0.08) == pytest.approx(fourier_coefficients(q1_params, pulse, 4).omega_bar)


def test_fourier_needs_a_drive(q1_params):
    with pytest.raises(DegenerateDriveError):
        fourier_coefficients(q1_params, FluxPulse(phi_bar=0.1, phi_tilde=0.05), 4)
    with pytest.raises(DomainError):
        fourier_coefficients(q1_params, FluxPulse(phi_bar=0.1, phi_tilde=0.05, omega_p=0.1), 1)


def test_first_order_taylor(q1_params):
    pulse = FluxPulse(phi_bar=0.2, phi_tilde=0.05, omega_p=0.1)
    profile = taylor_harmonics(q1_params, pulse, 1)
    assert profile.omega_bar == qubit_frequency(q1_params, 0.2)
    assert profile.harmonic(1) == pytest.approx(dfreq_dflux(q1_params, 0.2, 1) * 0.05)


def test_second_order_taylor_feeds_dc_and_second_harmonic(q1_params):
    pulse = FluxPulse(phi_bar=0.2, phi_tilde=0.05, omega_p=0.1)
    profile = taylor_harmonics(q1_params, pulse, 2)
    quarter = 0.25 * dfreq_dflux(q1_params, 0.2, 2) * 0.05**2
    assert profile.omega_bar == pytest.approx(qubit_frequency(q1_params, 0.2) + quarter)
    assert profile.harmonic(2) == pytest.approx(quarter)


def test_taylor_order_range(q1_params):
    with pytest.raises(DomainError):
        taylor_harmonics(q1_params, FluxPulse(phi_bar=0.1, phi_tilde=0.05, omega_p=0.1), 11)


def test_average_deviation_accepts_callables(q1_params):
    pulse = FluxPulse(phi_bar=0.1, phi_tilde=0.05, omega_p=0.1)
    assert average_deviation(lambda t: frequency_trace(q1_params, pulse, t), q1_params, pulse) == 0.0
    shifted = average_deviation(lambda t: frequency_trace(q1_params, pulse, t) + 0.001, q1_params, pulse)
    assert shifted == pytest.approx(0.001, abs=1e-12)


def test_truncated_keeps_low_harmonics(q1_params):
    profile = fourier_coefficients(q1_params, FluxPulse(phi_bar=0.1, phi_tilde=0.05, omega_p=0.1), 8)
    assert [k for k, _ in truncated(profile, 3).fourier] == [0, 1, 2, 3]


def _deviations(params, pair):
    pulse = FluxPulse(phi_bar=pair[0], phi_tilde=pair[1], omega_p=0.1)
    rows = taylor_fourier_table(params, pulse, range(1, 11))
    return np.array([r["taylor"] for r in rows]), np.array([r["fourier"] for r in rows])


def test_taylor_and_fourier_converge(q2_params):
    sweet = _deviations(q2_params, SWEET_PAIR)
    off = _deviations(q2_params, OFF_SWEET_PAIR)
    for taylor, fourier in (sweet, off):
        for tail, noise in ((taylor[2:], 0.0), (fourier[2:], 1e-9)):
            assert np.all(tail[1:] <= tail[:-1] + noise)
            assert tail[-1] < tail[0]
    # At the sweet spot only even orders add a term, so order 2m matches order m off the sweet spot.
    for m in range(2, 6):
        assert sweet[0][2 * m - 1] < off[0][m - 1]
        assert sweet[1][2 * m - 1] < off[1][m - 1]


def test_sweet_spot_odd_orders_add_nothing(q2_params):
    taylor, fourier = _deviations(q2_params, SWEET_PAIR)
    np.testing.assert_array_equal(taylor[2::2], taylor[1:-1:2])
    np.testing.assert_allclose(fourier[2::2], fourier[1:-1:2], rtol=0, atol=1e-9)


def test_fourier_beats_taylor_at_high_order(q1_params):
    taylor, fourier = _deviations(q1_params, OFF_SWEET_PAIR)
    assert fourier[-1] < taylor[-1]


@pytest.mark.parametrize("phi_bar, spacing", [(0.0, 0.2), (0.15, 0.1)])
def test_sideband_spacing(q1_params, phi_bar, spacing):
    pulse = FluxPulse(phi_bar=phi_bar, phi_tilde=0.05, omega_p=0.1)
    spectrum = sideband_spectrum(fourier_coefficients(q1_params, pulse, 6), pulse, 3)
    frequencies = [f for f, _ in spectrum.peaks]
    assert spectrum.order_range == (-3, 3)
    np.testing.assert_allclose(np.diff(frequencies), spacing, rtol=1e-12)
    assert sum(w for _, w in spectrum.peaks) <= 1.0 + 1e-12


def test_sideband_spectrum_needs_drive(q1_params):
    pulse = FluxPulse(phi_bar=0.1)
    profile = fourier_coefficients(q1_params, pulse, 4)
    with pytest.raises(DegenerateDriveError):
        sideband_spectrum(profile, pulse, 2)


@pytest.mark.parametrize("phi_bar, phi_tilde", [(0.1, 0.07), (0.0, 0.15), (0.25, 0.02)])
def test_excursion_from_shift_round_trip(q1_params, phi_bar, phi_tilde):
    shift = dc_component(q1_params, phi_bar, phi_tilde) - qubit_frequency(q1_params, phi_bar)
    assert excursion_from_shift(q1_params, phi_bar, 0.1, shift) == pytest.approx(phi_tilde, abs=1e-7)


def test_excursion_from_shift_edges(q1_params):
    assert excursion_from_shift(q1_params, 0.1, 0.1, 0.0) == 0.0
    with pytest.raises(NoSolutionError):
        excursion_from_shift(q1_params, 0.1, 0.1, 0.01)
    with pytest.raises(NoSolutionError):
        excursion_from_shift(q1_params, 0.1, 0.1, -5.0)
    with pytest.raises(DegenerateDriveError):
        excursion_from_shift(q1_params, 0.1, 0.0, -0.01)


@pytest.mark.parametrize("phi_tilde", [0.395, 0.3995])
def test_excursion_from_shift_near_flux_edge(q1_params, phi_tilde):
    shift = dc_component(q1_params, 0.1, phi_tilde) - qubit_frequency(q1_params, 0.1)
    assert excursion_from_shift(q1_params, 0.1, 0.1, shift) == pytest.approx(phi_tilde, abs=1e-6)


@pytest.mark.parametrize("phi_bar, phi_tilde", [(0.1, 0.1), (0.0, 0.2)])
def test_harmonics_carry_the_variance(q1_params, phi_bar, phi_tilde):
    pulse = FluxPulse(phi_bar=phi_bar, phi_tilde=phi_tilde, omega_p=0.1)
    profile = fourier_coefficients(q1_params, pulse, 20)
    t = np.linspace(0.0, 1e-8, 4096, endpoint=False)
    variance = np.mean((frequency_trace(q1_params, pulse, t) - profile.omega_bar) ** 2)
    power = sum(f**2 for k, f in profile.fourier if k >= 1) / 2
    assert variance == pytest.approx(power, rel=0, abs=1e-8)
