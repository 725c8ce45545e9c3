import numpy as np
import pytest
from scipy import optimize

from phasemod.constants import (
    ExperimentConfig,
    FluxPulse,
    SweepSpec,
    TransmonParams,
    TwoQubitSystem,
)
from phasemod.experiments import modulation_profile
from phasemod.transmon_model import flux_for_frequency, qubit_frequency

G = 0.0105
STEEP_BIAS = 0.25


@pytest.fixture
def q1_params():
    return TransmonParams(e_c=0.240, e_j1=8.5115, e_j2=8.5115, anharmonicity=-0.248)


@pytest.fixture
def q2_params():
    return TransmonParams(e_c=0.240, e_j1=8.286, e_j2=8.286, anharmonicity=-0.248)


@pytest.fixture
def pair_system(q1_params, q2_params):
    return TwoQubitSystem(q1=q1_params, q2=q2_params, g=G, levels=2)


def place_below(q1_params, q2_params, gap: float) -> tuple[float, float]:
    """(phi_bar1, phi_bar2) with qubit 2 parked ``gap`` GHz below qubit 1."""
    target = qubit_frequency(q1_params, STEEP_BIAS) - gap
    return STEEP_BIAS, flux_for_frequency(q2_params, target)


@pytest.fixture
def sideband_config(q1_params, q2_params):
    """Factory for first-order configs on steep biases, detuned by ``gap`` GHz."""

    def build(phi_tilde1, phi_tilde2=0.0, gap=0.15, points=1, stop=0.0, omega_p=None, **sweep):
        bar1, bar2 = place_below(q1_params, q2_params, gap)
        omega_p = omega_p or gap
        spec = dict(axis="dphi", start=0.0, stop=stop, points=points, order=1, dt=2.5e-11)
        spec.update(sweep)
        return ExperimentConfig(
            name="test-sideband",
            system=TwoQubitSystem(q1=q1_params, q2=q2_params, g=G, levels=2),
            pulses=(
                FluxPulse(phi_bar=bar1, phi_tilde=phi_tilde1, omega_p=omega_p if phi_tilde1 else 0.0),
                FluxPulse(phi_bar=bar2, phi_tilde=phi_tilde2, omega_p=omega_p if phi_tilde2 else 0.0),
            ),
            sweep=SweepSpec(**spec),
        )

    return build


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def matched_amplitude(q1_params, q2_params, phi_tilde1, gap, omega_p):
    """Φ̃2 giving qubit 2 the same first-harmonic excursion as qubit 1."""
    bar1, bar2 = place_below(q1_params, q2_params, gap)
    target = modulation_profile(q1_params, FluxPulse(phi_bar=bar1, phi_tilde=phi_tilde1, omega_p=omega_p))

    def mismatch(phi_tilde2):
        pulse = FluxPulse(phi_bar=bar2, phi_tilde=phi_tilde2, omega_p=omega_p)
        return modulation_profile(q2_params, pulse).base_amplitude - target.base_amplitude

    return optimize.brentq(mismatch, 1e-3, 0.1, xtol=1e-12)
