import enum
import math
from dataclasses import dataclass, field

import numpy as np

from config import Config
from utils.errors import ShapeError


class QubitState(enum.Enum):
    GROUND = 'ground'
    EXCITED = 'excited'


class Quadratures(enum.Enum):
    X = 'x'
    XY = 'xy'


class ResetMode(enum.Enum):
    PASSIVE = 'passive'
    CLEAR = 'clear'
    GRAPE = 'grape'
    GRAPE_PENALIZED = 'grape_penalized'


class CalibrationMethod(enum.Enum):
    ANALYTIC = 'analytic-steady-state'
    NUMERIC = 'numeric-steady-state'


@dataclass(frozen=True)
class DispersiveModel:
    """Rotating-frame resonator with qubit-state dependent pull ±χ (rad/ns)."""
    chi: float
    kerr: float
    kappa: float
    detuning: float = 0.0
    fock_dim: int = 40
    n_crit: float = 29.0
    # +1: ground branch sees +χ
    ground_sign: int = 1

    def __post_init__(self):
        if self.kappa <= 0:
            raise ShapeError(f'kappa must be > 0, got {self.kappa}')
        if self.fock_dim < 2:
            raise ShapeError(f'fock_dim must be >= 2, got {self.fock_dim}')
        if self.ground_sign not in (1, -1):
            raise ShapeError('ground_sign must be +1 or -1')

    def branch_sign(self, qubit_state):
        return self.ground_sign if qubit_state is QubitState.GROUND else -self.ground_sign

    def branch_detuning(self, qubit_state):
        return self.detuning + self.branch_sign(qubit_state) * self.chi

    @property
    def decay_time(self):
        return 1.0 / self.kappa


@dataclass(frozen=True)
class MeasurementPulse:
    duration: float
    amplitude_schedule: np.ndarray
    subpixel_dt: float

    @property
    def end_amplitude(self):
        return float(self.amplitude_schedule[-1]) if self.amplitude_schedule.size else 0.0


@dataclass(frozen=True)
class CalibrationResult:
    eps_one_photon: float
    method: CalibrationMethod
    residual: float
    scan_trace: tuple = ()


@dataclass(frozen=True)
class ResetScenario:
    model: DispersiveModel
    p_norm: float
    horizon: float
    quadratures: Quadratures = Quadratures.XY
    penalty_beta: float = 0.0
    seed: int = 0
    pixel_dt: float = Config.PIXEL_DT_NS
    subpixel_dt: float = Config.SUBPIXEL_DT_NS
    bandwidth: float = 2 * math.pi * Config.BANDWIDTH_MHZ * 1e-3
    measurement_kappa_times: float = Config.MEASUREMENT_KAPPA_TIMES
    eps_one_photon: float | None = None
    calibration_method: CalibrationMethod = CalibrationMethod.ANALYTIC

    def __post_init__(self):
        if self.horizon <= 0:
            raise ShapeError(f'horizon must be > 0, got {self.horizon}')
        if self.p_norm <= 0:
            raise ShapeError(f'p_norm must be > 0, got {self.p_norm}')
        if self.penalty_beta < 0:
            raise ShapeError('penalty_beta must be >= 0')

    @property
    def n_pixels(self):
        return int(round(self.horizon / self.pixel_dt))

    @property
    def n_controls(self):
        return 2 if self.quadratures is Quadratures.XY else 1

    @property
    def measurement_duration(self):
        return self.measurement_kappa_times / self.model.kappa


@dataclass
class BranchSeries:
    label: str
    photon_number: np.ndarray
    final_photon: float
    max_photon: float
    truncation_leak: float


@dataclass
class ResetReport:
    # None for a simulated external pulse
    mode: ResetMode | None
    scenario: ResetScenario
    times: np.ndarray
    branches: list
    pixel_controls: np.ndarray
    subpixel_controls: np.ndarray
    pixel_dt: float
    subpixel_dt: float
    phi0: float
    phi_p: float
    history: list = field(default_factory=list)
    rk_steps: int = 0
    wall_time: float = 0.0
    stalled: bool = False
    eps_one_photon: float = 0.0
    calibration_method: str = ''
    fitted_branches: list = field(default_factory=list)
    fitted_pixel_controls: np.ndarray | None = None
    passive_monotonic: bool | None = None

    @property
    def final_photons(self):
        return {series.label: series.final_photon for series in self.branches}

    @property
    def max_photons(self):
        return {series.label: series.max_photon for series in self.branches}


@dataclass
class SweepPoint:
    p_norm: float
    horizon: float
    final_ground: float
    final_excited: float
    failed: bool
    stalled: bool = False


@dataclass
class SweepResult:
    points: list
    speed_limits: dict
    alpha: float
    alpha_stderr: float
    prefactor: float
    monotonic: bool
