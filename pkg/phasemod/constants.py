import os
import math
from pathlib import Path
from typing import Literal

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

load_dotenv()

# ==========================================
# 🔧 CONFIGURATION
# ==========================================
PACKAGE_DIR = Path(__file__).resolve().parent
PROFILE_DIR = Path(os.getenv("PHASEMOD_PROFILE_DIR", PACKAGE_DIR / "profiles"))
DEFAULT_PROFILE = "paper-device"
DEFAULT_WORKERS = int(os.getenv("PHASEMOD_WORKERS", "1"))
DEFAULT_OUT_DIR = os.getenv("PHASEMOD_OUT_DIR", "results")
DEFAULT_LOG_LEVEL = os.getenv("PHASEMOD_LOG_LEVEL", "WARNING")
TOOL_NAME = "phasemod"
TOOL_VERSION = "0.1.0"

# --- Units ---
# Frequencies are cyclic (value/2π) in GHz, flux in Φ0, API times in seconds.
# Integrators work in ns so that GHz·ns is a number of cycles.
TWO_PI = 2.0 * math.pi
NS_PER_S = 1e9
FLUX_LIMIT = 0.5
SWEET_SPOT_TOLERANCE = 1e-9

# --- Device defaults (two-qubit sample, sweet-spot frequencies 5.477 / 5.401 GHz) ---
E_C = 0.240
E_J_Q1 = 8.5115
E_J_Q2 = 8.286
ANHARMONICITY = -0.248
G_BARE = 0.0105
COUPLER_E_C = 0.184
COUPLER_E_J = 13.40
COUPLER_FLUX = 0.093
G_1C = 0.115
G_2C = 0.078
G_12 = 0.0075
REFERENCE_2G = 0.021


# --- Pydantic Models ---
class TransmonParams(BaseModel):
    """Symmetric-SQUID transmon, energies/2π in GHz."""

    model_config = ConfigDict(frozen=True)

    e_c: float = Field(..., gt=0, description="Charging energy/2π (GHz).")
    e_j1: float = Field(..., gt=0, description="Junction 1 energy/2π (GHz).")
    e_j2: float = Field(..., gt=0, description="Junction 2 energy/2π (GHz).")
    anharmonicity: float = Field(ANHARMONICITY, lt=0, description="α/2π (GHz).")

    @model_validator(mode="after")
    def _transmon_regime(self):
        ratio = (self.e_j1 + self.e_j2) / self.e_c
        if ratio <= 20:
            raise ValueError(f"(e_j1 + e_j2) / e_c = {ratio:.3g} must exceed 20 (transmon regime)")
        return self

    @property
    def e_j_sum(self) -> float:
        return self.e_j1 + self.e_j2


class FluxPulse(BaseModel):
    """Φ(t) = phi_bar + phi_tilde·cos(2π·omega_p·t + phi_p)."""

    model_config = ConfigDict(frozen=True)

    phi_bar: float = Field(0.0, description="Parking flux (Φ0).")
    phi_tilde: float = Field(0.0, ge=0, description="Modulation amplitude (Φ0).")
    omega_p: float = Field(0.0, ge=0, description="Drive frequency/2π (GHz).")
    phi_p: float = Field(0.0, description="Drive phase (rad).")

    @model_validator(mode="after")
    def _inside_flux_domain(self):
        reach = abs(self.phi_bar) + self.phi_tilde
        if reach >= FLUX_LIMIT:
            raise ValueError(f"|phi_bar| + phi_tilde = {reach:.4g} must stay below {FLUX_LIMIT}")
        return self

    @property
    def is_sweet(self) -> bool:
        return abs(self.phi_bar) < SWEET_SPOT_TOLERANCE


class CouplerParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    coupler_params: TransmonParams
    g_1c: float = Field(G_1C, ge=0)
    g_2c: float = Field(G_2C, ge=0)
    g_12: float = G_12
    flux_c: float = Field(COUPLER_FLUX, gt=-FLUX_LIMIT, lt=FLUX_LIMIT)


class TwoQubitSystem(BaseModel):
    """Two Duffing transmons with a transverse coupling g (GHz)."""

    model_config = ConfigDict(frozen=True)

    q1: TransmonParams
    q2: TransmonParams
    alpha1: float | None = None
    alpha2: float | None = None
    g: float = G_BARE
    levels: int = Field(3, ge=2, le=5)

    @model_validator(mode="before")
    @classmethod
    def _default_anharmonicities(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            for qubit, alpha in (("q1", "alpha1"), ("q2", "alpha2")):
                if data.get(alpha) is None and data.get(qubit) is not None:
                    q = data[qubit]
                    data[alpha] = q.anharmonicity if isinstance(q, TransmonParams) else q.get("anharmonicity", ANHARMONICITY)
        return data


class SweepSpec(BaseModel):
    """Sweep axis plus the integration and detection settings of a run."""

    model_config = ConfigDict(frozen=True)

    axis: Literal["dphi", "omega_p", "phi_tilde", "flux_c"] = "dphi"
    start: float = 0.0
    stop: float = TWO_PI
    points: int = Field(25, ge=1)
    order: int = 1
    t_final: float | None = Field(None, gt=0, description="Evolution window (s); None sizes it from the coupling.")
    dt: float = Field(2.5e-11, gt=0, description="Largest RK4 step (s); runs shrink it to the stable step of the drives.")
    samples: int = Field(200, ge=2, description="Time samples per chevron column.")
    detect_floor: float = Field(2e-4, ge=0, description="Smallest 2g (GHz) treated as detectable.")
    auto_resonance: bool = True
    dynamics: bool = True
    resonance_search: Literal["dynamics", "analytic"] = "dynamics"
    harmonics: int = Field(12, ge=2)

    @model_validator(mode="after")
    def _axis_range(self):
        if self.points > 1 and self.stop == self.start:
            raise ValueError("sweep.start and sweep.stop must differ when points > 1")
        return self


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = DEFAULT_PROFILE
    system: TwoQubitSystem
    pulses: tuple[FluxPulse, FluxPulse]
    coupler: CouplerParams | None = None
    sweep: SweepSpec = SweepSpec()

    @model_validator(mode="after")
    def _axis_is_meaningful(self):
        if self.sweep.axis == "flux_c" and self.coupler is None:
            raise ValueError("sweep.axis = 'flux_c' needs a [coupler] block")
        return self


class TransferTable(BaseModel):
    """Measured attenuation T(ω_p) between programmed and on-chip amplitude."""

    model_config = ConfigDict(frozen=True)

    frequencies: tuple[float, ...]
    factors: tuple[float, ...]

    @model_validator(mode="after")
    def _monotone_and_bounded(self):
        if len(self.frequencies) != len(self.factors) or len(self.frequencies) < 2:
            raise ValueError("transfer table needs at least two (omega_p, factor) rows")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("transfer table frequencies must be strictly increasing")
        if any(not 0 < f <= 1 for f in self.factors):
            raise ValueError("transfer factors must lie in (0, 1]")
        return self


class ModulationProfile(BaseModel):
    """Harmonic decomposition of ω(t) = Σ f_k cos(k(2π·omega_p·t + phi_p))."""

    model_config = ConfigDict(frozen=True)

    omega_bar: float
    excursion: float
    fourier: tuple[tuple[int, float], ...]
    base_harmonic: Literal[1, 2]
    dc_shift: float = 0.0
    omega_p: float = 0.0
    phi_p: float = 0.0

    def harmonic(self, k: int) -> float:
        for index, value in self.fourier:
            if index == k:
                return value
        return 0.0

    @property
    def base_amplitude(self) -> float:
        """Signed amplitude of the dominant harmonic."""
        return self.harmonic(self.base_harmonic)

    def reconstruct(self, t) -> np.ndarray:
        theta = TWO_PI * self.omega_p * NS_PER_S * np.asarray(t, dtype=float) + self.phi_p
        out = np.zeros_like(theta)
        for k, f_k in self.fourier:
            out = out + f_k * np.cos(k * theta)
        return out


class SidebandSpectrum(BaseModel):
    model_config = ConfigDict(frozen=True)

    peaks: tuple[tuple[float, float], ...]
    order_range: tuple[int, int]


class PhaseCoupling(BaseModel):
    model_config = ConfigDict(frozen=True)

    order: int
    argument_a: float
    magnitude: float
    prefactor_phase: float
    interaction_phase: float
    drive_frequency: float = Field(0.0, description="Effective drive frequency/2π after sweet-spot doubling (GHz).")

    @property
    def strength(self) -> float:
        """Splitting convention 2|g·J_n(A)| (GHz)."""
        return 2.0 * abs(self.magnitude)


class CosineFit(BaseModel):
    """B + C·exp(-t/τ)·cos(2πft + θ); frequency in GHz, decay in seconds."""

    model_config = ConfigDict(frozen=True)

    frequency: float
    decay: float
    amplitude: float
    offset: float
    phase: float
    residual: float


class TimeTrace(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    populations: dict[str, np.ndarray]
    norm: np.ndarray
    final_state: np.ndarray
    labels: tuple[str, ...]

    def channel(self, label: str) -> np.ndarray:
        if label not in self.populations:
            raise KeyError(f"no population channel {label!r}; have {sorted(self.populations)}")
        return self.populations[label]


class SummaryRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    value: float
    uncertainty: float = 0.0
    analytic: float = float("nan")
    flag: str = ""


class SweepGrid(BaseModel):
    """2-D sweep result: z has shape (len(y), len(x))."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x_name: str
    y_name: str
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    summary: tuple[SummaryRow, ...] = ()
    metadata: dict[str, str] = Field(default_factory=dict)

    @field_validator("x", "y", "z", mode="before")
    @classmethod
    def _as_array(cls, value):
        return np.asarray(value, dtype=float)

    @model_validator(mode="after")
    def _shape_matches_axes(self):
        if self.z.size == 0 and (self.x.size == 0 or self.y.size == 0):
            return self
        if self.z.shape != (self.y.size, self.x.size):
            raise ValueError(f"z shape {self.z.shape} does not match axes ({self.y.size}, {self.x.size})")
        return self
