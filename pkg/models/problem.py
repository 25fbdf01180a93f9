import enum
from dataclasses import dataclass, field

import numpy as np

from config import Config
from models.operator import Operator, DensityState
from models.propagation import IntegratorConfig, PiecewiseGenerator
from models.controls import TransferMatrix
from utils.errors import ShapeError


@dataclass(frozen=True)
class TargetOverlap:
    target: DensityState

    def terminal_operator(self):
        return self.target.entries


@dataclass(frozen=True)
class ObservableExpectation:
    observable: Operator

    def terminal_operator(self):
        return self.observable.entries


@dataclass(frozen=True)
class PhotonNumberPenalty:
    """∫₀ᵀ Tr(A ρ(t)) dt with A = a†a for resonator problems."""
    observable: Operator


@dataclass(frozen=True)
class Branch:
    """One weighted initial state; `drift` overrides the problem's H₀."""
    initial: DensityState
    weight: float = 1.0
    drift: Operator | None = None
    label: str = ''

    def __post_init__(self):
        if self.weight <= 0:
            raise ShapeError(f'state weight must be > 0, got {self.weight}')


@dataclass
class OptimizationProblem:
    drift: Operator
    control_ops: tuple
    channels: tuple
    branches: list
    objective: TargetOverlap | ObservableExpectation
    transfer: TransferMatrix
    penalties: list = field(default_factory=list)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    # concurrent branch propagations within one evaluation
    workers: int = 1

    def __post_init__(self):
        self.control_ops = tuple(self.control_ops)
        self.channels = tuple(self.channels)
        if not self.branches:
            raise ShapeError('a problem needs at least one initial state')
        dim = self.drift.dim
        for branch in self.branches:
            if branch.initial.dim != dim:
                raise ShapeError(f'initial state dim {branch.initial.dim} != {dim}')
            if branch.drift is not None and branch.drift.dim != dim:
                raise ShapeError(f'branch drift dim {branch.drift.dim} != {dim}')
        for _, beta in self.penalties:
            if beta < 0:
                raise ShapeError('penalty weights must be >= 0')

    @property
    def n_states(self):
        return len(self.branches)

    @property
    def total_weight(self):
        return float(sum(branch.weight for branch in self.branches))

    @property
    def subpixel_dt(self):
        return self.transfer.subpixel_dt

    def generator(self, branch, amplitudes):
        return PiecewiseGenerator(
            drift=branch.drift if branch.drift is not None else self.drift,
            control_ops=self.control_ops,
            channels=self.channels,
            amplitudes=amplitudes,
            subpixel_dt=self.transfer.subpixel_dt,
        )


@dataclass
class GradientResult:
    phi: float
    phi0: float
    phi_p: float
    pixel_gradient: np.ndarray
    subpixel_gradient: np.ndarray
    rk_steps: int
    final_states: list = field(default_factory=list, repr=False)
    trajectories: list = field(default_factory=list, repr=False)
    imag_residue: float = 0.0


class OptimizerKind(enum.Enum):
    BFGS = 'bfgs'
    LBFGS = 'lbfgs'


@dataclass(frozen=True)
class OptimizerConfig:
    kind: OptimizerKind = OptimizerKind.BFGS
    max_iters: int = Config.MAX_ITERS
    tol_g: float = Config.TOL_G
    tol_f: float = Config.TOL_F
    c1: float = Config.WOLFE_C1
    c2: float = Config.WOLFE_C2
    line_search_trials: int = Config.LINE_SEARCH_TRIALS
    memory: int = Config.LBFGS_MEMORY
    # largest entry of the first trial step; None gives a unit-norm first step
    initial_step: float | None = None
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, 'kind', OptimizerKind(self.kind))


@dataclass
class IterationRecord:
    iteration: int
    phi: float
    phi0: float
    phi_p: float
    grad_inf_norm: float
    step_len: float
    rk_steps: int


@dataclass
class OptimizerState:
    iteration: int = 0
    inverse_hessian: np.ndarray | None = None
    # limited-memory (s, y, 1/yᵀs) triples
    pairs: list = field(default_factory=list)
    history: list = field(default_factory=list)
    rng_seed: int = 0
    stalled: bool = False
    converged: bool = False
    stop_reason: str = ''
    skipped_pairs: int = 0
    initial_scale: float | None = None
    curvature_pairs: int = 0
    best_phi: float = -np.inf
    evaluations: int = 0
