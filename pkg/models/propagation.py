import enum
from dataclasses import dataclass, field, replace

import numpy as np

from config import Config
from models.operator import Operator, as_matrix
from utils.errors import ShapeError


class IntegrationMethod(enum.Enum):
    RK4 = 'rk4'
    DOPRI45 = 'dopri45'


class Direction(enum.Enum):
    FORWARD = 'forward'
    BACKWARD = 'backward'


@dataclass(frozen=True)
class IntegratorConfig:
    method: IntegrationMethod = IntegrationMethod.DOPRI45
    rel_tol: float = Config.RTOL
    abs_tol: float = Config.ATOL
    max_steps_per_subpixel: int = Config.MAX_STEPS_PER_SUBPIXEL
    rehermitize_every: int = Config.REHERMITIZE_EVERY
    # classical RK4 substeps per subpixel
    fixed_substeps: int = Config.FIXED_SUBSTEPS
    # backward pass hands costates to a visitor instead of storing them
    streaming: bool = False

    def __post_init__(self):
        if isinstance(self.method, str):
            object.__setattr__(self, 'method', IntegrationMethod(self.method))
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ShapeError('integrator tolerances must be positive')
        if self.fixed_substeps < 1 or self.max_steps_per_subpixel < 1:
            raise ShapeError('step counts must be >= 1')


@dataclass(frozen=True)
class PiecewiseGenerator:
    """H₀ + Σₖ sₖ(n) Hₖ plus the dissipators, constant on each subpixel."""
    drift: Operator
    control_ops: tuple
    channels: tuple
    amplitudes: np.ndarray
    subpixel_dt: float
    _decay: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'control_ops', tuple(self.control_ops))
        object.__setattr__(self, 'channels', tuple(self.channels))
        amplitudes = np.asarray(self.amplitudes, dtype=np.float64)
        if amplitudes.ndim == 1:
            amplitudes = amplitudes.reshape(-1, max(len(self.control_ops), 1))
        if amplitudes.shape[0] and amplitudes.shape[1] != len(self.control_ops) and self.control_ops:
            raise ShapeError(f'amplitudes have {amplitudes.shape[1]} columns for '
                             f'{len(self.control_ops)} control operators')
        if not np.all(np.isfinite(amplitudes)):
            raise ShapeError('control amplitudes must be finite')
        if self.subpixel_dt <= 0:
            raise ShapeError('subpixel duration must be positive')
        dim = self.drift.dim
        for op in self.control_ops:
            if op.dim != dim:
                raise ShapeError(f'control operator dim {op.dim} != drift dim {dim}')
        decay = np.zeros((dim, dim), dtype=np.complex128)
        for channel in self.channels:
            if channel.collapse.dim != dim:
                raise ShapeError(f'collapse operator dim {channel.collapse.dim} != drift dim {dim}')
            a = channel.collapse.entries
            decay += channel.rate * (a.conj().T @ a)
        object.__setattr__(self, 'amplitudes', amplitudes)
        object.__setattr__(self, '_decay', decay)

    @property
    def dim(self):
        return self.drift.dim

    @property
    def n_subpixels(self):
        return self.amplitudes.shape[0]

    @property
    def horizon(self):
        return self.n_subpixels * self.subpixel_dt

    def hamiltonian(self, n):
        h = self.drift.entries.copy()
        for k, op in enumerate(self.control_ops):
            h += self.amplitudes[n, k] * op.entries
        return h

    def effective_hamiltonian(self, n):
        """H − (i/2) Σ γⱼ aⱼ†aⱼ for subpixel n."""
        return self.hamiltonian(n) - 0.5j * self._decay

    def with_amplitudes(self, amplitudes):
        return replace(self, amplitudes=amplitudes)

    def with_drift(self, drift):
        return replace(self, drift=drift)


@dataclass
class Trajectory:
    states: np.ndarray | None
    rk_step_count: int
    direction: Direction
    rejected_steps: int = 0
    subpixel_dt: float = 0.0

    @property
    def n_subpixels(self):
        return self.states.shape[0] - 1

    def state(self, n):
        return self.states[n]

    def times(self):
        return np.arange(self.states.shape[0]) * self.subpixel_dt

    def expectation_series(self, observable):
        obs = as_matrix(observable)
        # Tr(A ρ) = Σ A_ij ρ_ji
        return np.einsum('ij,nji->n', obs, self.states)

    def memory_bytes(self):
        return 0 if self.states is None else self.states.nbytes


def trajectory_memory_bytes(n_subpixels, dim):
    """Bytes held by one stored trajectory of complex128 snapshots."""
    return (n_subpixels + 1) * dim * dim * 16
