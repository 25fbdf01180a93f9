"""Liouville-space reference: d²×d² superoperators and matrix exponentials.

Vectorization is column stacking, vec(X) = X.reshape(-1, order='F'), so that
vec(A X B) = (Bᵀ ⊗ A) vec(X). Used as a correctness oracle at small d and as
the baseline of the propagation-cost benchmark.
"""
import logging
import os
import statistics
import time
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from models.operator import DissipationChannel, Operator, as_matrix
from models.propagation import IntegratorConfig, PiecewiseGenerator
from services.operator_service import OperatorService
from services.propagation_service import PropagationService
from utils.errors import ExpmOverflowError, ShapeError

logger = logging.getLogger(__name__)

# ‖L·dt‖₁ beyond this cannot be squared back without overflow
_EXPM_NORM_LIMIT = 1e6


@dataclass(frozen=True)
class Superoperator:
    entries: np.ndarray
    dim: int

    @property
    def adjoint(self):
        return Superoperator(self.entries.conj().T, self.dim)


@dataclass
class BenchmarkRow:
    dim: int
    t_expm_ms: float
    t_rk_ms: float
    n_rk: int
    trace_dist: float


@dataclass
class BenchmarkResult:
    rows: list
    expm_slope: float
    expm_slope_stderr: float
    rk_slope: float
    rk_slope_stderr: float


class LiouvilleService:
    @staticmethod
    def vec(x):
        return np.asarray(x).reshape(-1, order='F')

    @staticmethod
    def unvec(v, dim):
        return np.asarray(v).reshape((dim, dim), order='F')

    @staticmethod
    def build_superoperator(H, channels):
        h = as_matrix(H)
        dim = h.shape[0]
        for channel in channels:
            if channel.collapse.dim != dim:
                raise ShapeError(f'collapse operator dim {channel.collapse.dim} != Hamiltonian dim {dim}')
        eye = np.eye(dim, dtype=np.complex128)
        sup = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
        for channel in channels:
            a = channel.collapse.entries
            n_op = a.conj().T @ a
            sup += channel.rate * (np.kron(a.conj(), a) - 0.5 * np.kron(eye, n_op) - 0.5 * np.kron(n_op.T, eye))
        return Superoperator(sup, dim)

    @staticmethod
    def apply(sup, rho):
        return LiouvilleService.unvec(sup.entries @ LiouvilleService.vec(as_matrix(rho)), sup.dim)

    @staticmethod
    def expm_propagator(sup, dt):
        if dt < 0:
            raise ShapeError(f'propagation time must be >= 0, got {dt}')
        scaled = sup.entries * dt
        norm = float(np.linalg.norm(scaled, 1))
        if not np.isfinite(norm) or norm > _EXPM_NORM_LIMIT:
            raise ExpmOverflowError(f'‖L·dt‖₁ = {norm:.3e} is too large to exponentiate', norm=norm)
        if dt == 0:
            return Superoperator(np.eye(sup.entries.shape[0], dtype=np.complex128), sup.dim)
        prop = linalg.expm(scaled)
        if not np.all(np.isfinite(prop)):
            raise ExpmOverflowError(f'matrix exponential overflowed (‖L·dt‖₁ = {norm:.3e})', norm=norm)
        return Superoperator(prop, sup.dim)

    @staticmethod
    def propagate_piecewise(initial, gen):
        """Reference propagation through every subpixel of a generator; returns all boundary states."""
        rho = LiouvilleService.vec(as_matrix(initial))
        states = [LiouvilleService.unvec(rho, gen.dim)]
        for n in range(gen.n_subpixels):
            sup = LiouvilleService.build_superoperator(gen.hamiltonian(n), gen.channels)
            prop = LiouvilleService.expm_propagator(sup, gen.subpixel_dt)
            rho = prop.entries @ rho
            states.append(LiouvilleService.unvec(rho, gen.dim))
        return np.array(states)

    @staticmethod
    def driven_cavity_generator(dim, n_pixels, pixel_dt, kappa, detuning, amplitudes):
        """Linear driven-damped cavity, the fixed physics of the benchmark at every d."""
        a = OperatorService.annihilation(dim)
        return PiecewiseGenerator(
            drift=Operator(detuning * OperatorService.number(dim).entries, hermitian=True),
            control_ops=(Operator(a.entries + a.entries.conj().T, hermitian=True),),
            channels=(DissipationChannel(kappa, a),),
            amplitudes=np.asarray(amplitudes, dtype=np.float64).reshape(n_pixels, 1),
            subpixel_dt=pixel_dt,
        )

    @staticmethod
    def benchmark_scaling(dims, n_pixels=100, repetitions=3, n_states=2, pixel_dt=1.0,
                          kappa=2 * np.pi * 1.1e-3, detuning=2 * np.pi * 1.3e-3, cfg=None, seed=0):
        """Wall time of N expm propagators versus RK propagation of n_s states, per d."""
        if os.environ.get('OMP_NUM_THREADS') != '1':
            logger.warning('benchmark timings assume single-threaded BLAS; set OMP_NUM_THREADS=1')
        cfg = cfg or IntegratorConfig()
        rng = np.random.default_rng(seed)
        # one schedule shared by every d, amplitudes ~ 2π × 1 MHz
        amplitudes = rng.uniform(-1.0, 1.0, size=n_pixels) * 2 * np.pi * 1e-3
        rows = []
        for dim in sorted(dims):
            gen = LiouvilleService.driven_cavity_generator(dim, n_pixels, pixel_dt, kappa, detuning, amplitudes)
            initials = [np.zeros((dim, dim), dtype=np.complex128) for _ in range(n_states)]
            for i, rho in enumerate(initials):
                rho[min(i, dim - 1), min(i, dim - 1)] = 1.0

            def run_expm():
                props = [LiouvilleService.expm_propagator(
                    LiouvilleService.build_superoperator(gen.hamiltonian(n), gen.channels), pixel_dt)
                    for n in range(n_pixels)]
                finals = []
                for rho in initials:
                    v = LiouvilleService.vec(rho)
                    for prop in props:
                        v = prop.entries @ v
                    finals.append(LiouvilleService.unvec(v, dim))
                return finals

            def run_rk():
                trajectories = [PropagationService.propagate_forward(rho, gen, cfg) for rho in initials]
                return [traj.states[-1] for traj in trajectories], sum(t.rk_step_count for t in trajectories)

            # warm-up excludes allocation and first-call overheads
            run_expm()
            run_rk()
            expm_times, rk_times = [], []
            for _ in range(repetitions):
                start = time.perf_counter()
                expm_finals = run_expm()
                expm_times.append(time.perf_counter() - start)
                start = time.perf_counter()
                rk_finals, n_rk = run_rk()
                rk_times.append(time.perf_counter() - start)
            trace_dist = max(OperatorService.trace_distance(a, b) for a, b in zip(expm_finals, rk_finals))
            row = BenchmarkRow(dim=dim, t_expm_ms=1e3 * statistics.median(expm_times),
                               t_rk_ms=1e3 * statistics.median(rk_times), n_rk=n_rk, trace_dist=trace_dist)
            logger.info('benchmark d=%d: expm %.1f ms, rk %.1f ms, n_RK=%d, trace distance %.1e',
                        dim, row.t_expm_ms, row.t_rk_ms, n_rk, trace_dist)
            rows.append(row)
        expm_fit = LiouvilleService._slope([r.dim for r in rows], [r.t_expm_ms for r in rows])
        rk_fit = LiouvilleService._slope([r.dim for r in rows], [r.t_rk_ms for r in rows])
        return BenchmarkResult(rows=rows, expm_slope=expm_fit[0], expm_slope_stderr=expm_fit[1],
                               rk_slope=rk_fit[0], rk_slope_stderr=rk_fit[1])

    @staticmethod
    def _slope(dims, times):
        if len(dims) < 2:
            return float('nan'), float('nan')
        fit = stats.linregress(np.log(dims), np.log(times))
        return float(fit.slope), float(fit.stderr)
