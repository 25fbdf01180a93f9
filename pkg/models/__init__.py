from .operator import Operator, DensityState, DissipationChannel, as_matrix
from .propagation import IntegrationMethod, Direction, IntegratorConfig, PiecewiseGenerator, Trajectory
from .controls import ControlGrid, SubpixelGrid, TransferMatrix
from .problem import TargetOverlap, ObservableExpectation, PhotonNumberPenalty, Branch, OptimizationProblem, \
    GradientResult, OptimizerKind, OptimizerConfig, IterationRecord, OptimizerState
from .reset import QubitState, Quadratures, ResetMode, CalibrationMethod, DispersiveModel, MeasurementPulse, \
    CalibrationResult, ResetScenario, BranchSeries, ResetReport, SweepPoint, SweepResult
from .manifest import Command, RunManifest
