"""Active reset of a dispersively coupled readout resonator.

Each qubit branch sees the rotating-frame drift H₀ = (δ ± χ)a†a + K(a†a)²,
the drive enters as ε_X(a† + a) + ε_Y·i(a† − a) and the only dissipator is
κD[a]. The measurement drive prepares the two branch states; the reset pulse
then has to empty the resonator for both at once.
"""
import logging
import math
import time

import numpy as np
from scipy import optimize

from config import Config
from models.controls import ControlGrid
from models.operator import DensityState, DissipationChannel, Operator
from models.problem import Branch, OptimizationProblem, OptimizerConfig, PhotonNumberPenalty, TargetOverlap
from models.propagation import IntegratorConfig, PiecewiseGenerator
from models.reset import BranchSeries, MeasurementPulse, QubitState, ResetMode, ResetReport
from services.calibration_service import CalibrationService
from services.filter_service import FilterService
from services.grape_service import GrapeService
from services.operator_service import OperatorService
from services.optimizer_service import OptimizerService
from services.propagation_service import PropagationService
from utils.errors import TruncationError

logger = logging.getLogger(__name__)

CLEAR_MAX_EVALUATIONS = 200
# passive decay may rise by at most this much between snapshots
MONOTONIC_TOL = 1e-9


class ResetService:
    @staticmethod
    def number_operator(model):
        return OperatorService.number(model.fock_dim)

    @staticmethod
    def build_branch_hamiltonians(model, qubit_state):
        """(H₀, [H_X, H_Y]) for one qubit branch."""
        n = OperatorService.number(model.fock_dim).entries
        a = OperatorService.annihilation(model.fock_dim).entries
        a_dag = a.conj().T
        drift = Operator(model.branch_detuning(qubit_state) * n + model.kerr * (n @ n), hermitian=True)
        h_x = Operator(a_dag + a, hermitian=True)
        h_y = Operator(1j * (a_dag - a), hermitian=True)
        return drift, [h_x, h_y]

    @staticmethod
    def channels(model):
        return (DissipationChannel(model.kappa, OperatorService.annihilation(model.fock_dim)),)

    @staticmethod
    def generator(model, drift, controls, amplitudes, subpixel_dt):
        return PiecewiseGenerator(drift=drift, control_ops=tuple(controls), channels=ResetService.channels(model),
                                  amplitudes=amplitudes, subpixel_dt=subpixel_dt)

    @staticmethod
    def steady_state_photon_analytic(model, qubit_state, eps):
        return CalibrationService.steady_state_photon_analytic(model, qubit_state, eps)

    @staticmethod
    def drive_amplitude(scenario):
        """ε = √P_norm · √P₁ₚₕ, calibrating when the scenario carries no amplitude."""
        eps_one = scenario.eps_one_photon
        if eps_one is None:
            eps_one = CalibrationService.calibrate_one_photon(scenario.model,
                                                              scenario.calibration_method).eps_one_photon
        return math.sqrt(scenario.p_norm) * eps_one, eps_one

    @staticmethod
    def measurement_pulse(scenario, eps):
        """Filtered constant drive of duration T_m, computed on a grid padded past T_m.

        The padding keeps the filter from seeing the drive switch off at T_m,
        so the schedule ends at ε.
        """
        model = scenario.model
        duration = scenario.measurement_duration
        n_pixels = int(math.ceil(duration / scenario.pixel_dt - 1e-9))
        tm = FilterService.build_gaussian_transfer(n_pixels, scenario.pixel_dt, scenario.subpixel_dt,
                                                   scenario.bandwidth)
        omega0 = float(tm.reference_bandwidth[0])
        pad = int(math.ceil(12.0 / (omega0 * scenario.pixel_dt))) + 1
        padded = FilterService.build_gaussian_transfer(n_pixels + pad, scenario.pixel_dt, scenario.subpixel_dt,
                                                       scenario.bandwidth)
        schedule = FilterService.apply_filter(padded, np.full(n_pixels + pad, eps)).values[:tm.n_subpixels, 0]
        logger.debug('measurement pulse: %d subpixels over %.1f ns (κT_m = %.2f)', schedule.size,
                     n_pixels * scenario.pixel_dt, n_pixels * scenario.pixel_dt * model.kappa)
        return MeasurementPulse(duration=n_pixels * scenario.pixel_dt, amplitude_schedule=schedule,
                                subpixel_dt=scenario.subpixel_dt)

    @staticmethod
    def prepare_measurement_state(scenario, eps=None, cfg=None):
        """Vacuum driven by the measurement pulse, per branch; returns ({QubitState: DensityState}, pulse)."""
        if eps is None:
            eps, _ = ResetService.drive_amplitude(scenario)
        model = scenario.model
        pulse = ResetService.measurement_pulse(scenario, eps)
        vacuum = DensityState.fock(model.fock_dim, 0)
        states = {}
        for qs in QubitState:
            drift, controls = ResetService.build_branch_hamiltonians(model, qs)
            amplitudes = np.zeros((pulse.amplitude_schedule.size, len(controls)))
            amplitudes[:, 0] = pulse.amplitude_schedule
            gen = ResetService.generator(model, drift, controls, amplitudes, pulse.subpixel_dt)
            traj = PropagationService.propagate_forward(vacuum, gen, cfg)
            leak = OperatorService.truncation_leak(traj.states)
            if leak > Config.TRUNCATION_LEAK_MAX:
                raise TruncationError(f'{qs.value} branch populates the top Fock levels ({leak:.2e}) during '
                                      f'the measurement; increase fock_dim beyond {model.fock_dim}', leak=leak)
            final = OperatorService.hermitize(traj.states[-1])
            states[qs] = DensityState(final / np.trace(final).real)
        return states, pulse

    @staticmethod
    def build_problem(scenario, states, beta=0.0, include_penalty=False, cfg=None, workers=1):
        model = scenario.model
        branches = []
        controls = None
        for qs in QubitState:
            drift, ops = ResetService.build_branch_hamiltonians(model, qs)
            controls = ops[:scenario.n_controls]
            branches.append(Branch(initial=states[qs], weight=1.0, drift=drift, label=qs.value))
        transfer = FilterService.build_gaussian_transfer(scenario.n_pixels, scenario.pixel_dt,
                                                         scenario.subpixel_dt, scenario.bandwidth)
        penalties = []
        if beta > 0 or include_penalty:
            penalties.append((PhotonNumberPenalty(ResetService.number_operator(model)), beta))
        return OptimizationProblem(
            drift=branches[0].drift,
            control_ops=controls,
            channels=ResetService.channels(model),
            branches=branches,
            objective=TargetOverlap(DensityState.fock(model.fock_dim, 0)),
            transfer=transfer,
            penalties=penalties,
            integrator=cfg or IntegratorConfig(),
            workers=workers,
        )

    @staticmethod
    def pinned_controls(scenario, end_amplitude, values=None):
        """Reset pulse grid with X pinned to the measurement end amplitude at t = 0 and every control to 0 at T."""
        n_controls = scenario.n_controls
        if values is None:
            values = np.zeros((scenario.n_pixels, n_controls))
        grid = ControlGrid(pixel_dt=scenario.pixel_dt, values=values)
        first = [end_amplitude] + [0.0] * (n_controls - 1)
        last = [0.0] * n_controls
        return FilterService.pin_boundaries(grid, first, last)

    @staticmethod
    def clear_initial_guess(scenario, problem=None, end_amplitude=None, states=None):
        """Two-step X pulse tuned by coordinate descent on Φ₀; Y drawn uniformly from ±ε₀/10."""
        eps, _ = ResetService.drive_amplitude(scenario)
        if states is None or end_amplitude is None:
            states, pulse = ResetService.prepare_measurement_state(scenario, eps)
            end_amplitude = pulse.end_amplitude
        problem = problem or ResetService.build_problem(scenario, states)
        n_pixels = scenario.n_pixels
        half = n_pixels // 2
        rng = np.random.default_rng(scenario.seed)
        base = np.zeros((n_pixels, scenario.n_controls))
        if scenario.n_controls > 1:
            base[:, 1] = rng.uniform(-eps / 10.0, eps / 10.0, size=n_pixels)

        def grid(levels):
            values = base.copy()
            values[:half, 0] = levels[0]
            values[half:, 0] = levels[1]
            return ResetService.pinned_controls(scenario, end_amplitude, values)

        # Y stays zero while the two X levels are searched
        def search_grid(levels):
            values = np.zeros_like(base)
            values[:half, 0] = levels[0]
            values[half:, 0] = levels[1]
            return ResetService.pinned_controls(scenario, end_amplitude, values)

        evaluations = 0

        def loss(levels):
            nonlocal evaluations
            evaluations += 1
            return -GrapeService.evaluate(problem, search_grid(levels)).phi0

        zero_loss = loss((0.0, 0.0))
        if eps == 0.0:
            return grid((0.0, 0.0))
        levels = [0.0, 0.0]
        best = zero_loss
        bound = 3.0 * eps
        while evaluations < CLEAR_MAX_EVALUATIONS:
            previous = best
            for i in range(2):
                budget = CLEAR_MAX_EVALUATIONS - evaluations
                if budget <= 0:
                    break

                def along(value, i=i):
                    trial = list(levels)
                    trial[i] = value
                    return loss(trial)

                res = optimize.minimize_scalar(along, bounds=(-bound, bound), method='bounded',
                                               options={'maxiter': min(25, budget), 'xatol': 1e-6 * eps})
                if res.fun < best:
                    best = float(res.fun)
                    levels[i] = float(res.x)
            if previous - best < 1e-8:
                break
        if best > zero_loss:
            logger.warning('two-step search did not improve on zero drive; falling back to zeros')
            levels = [0.0, 0.0]
        logger.info('two-step guess: levels %.4e, %.4e rad/ns, Φ₀ = %.6f after %d evaluations',
                    levels[0], levels[1], -best, evaluations)
        return grid(levels)

    @staticmethod
    def penalty_weight(scenario):
        return scenario.penalty_beta if scenario.penalty_beta > 0 else 0.2 / scenario.horizon

    @staticmethod
    def run_reset(scenario, mode, initial_controls=None, optimizer_cfg=None, cfg=None, workers=1,
                  poly_degree=Config.POLY_DEGREE):
        mode = ResetMode(mode)
        started = time.perf_counter()
        eps, eps_one = ResetService.drive_amplitude(scenario)
        states, pulse = ResetService.prepare_measurement_state(scenario, eps, cfg)
        end_amplitude = pulse.end_amplitude
        optimizer_cfg = optimizer_cfg or OptimizerConfig(seed=scenario.seed)
        beta = ResetService.penalty_weight(scenario) if mode is ResetMode.GRAPE_PENALIZED else 0.0
        logger.info('reset run: mode=%s, P_norm=%.3g, T=%.1f ns, ε = 2π × %.4f MHz', mode.value,
                    scenario.p_norm, scenario.horizon, eps / (2 * math.pi) * 1e3)

        history, stalled = [], False
        if mode is ResetMode.PASSIVE:
            controls = ControlGrid(pixel_dt=scenario.pixel_dt,
                                   values=np.zeros((scenario.n_pixels, scenario.n_controls)))
        else:
            base_problem = ResetService.build_problem(scenario, states, cfg=cfg, workers=workers)
            if mode is ResetMode.CLEAR:
                guess = ResetService.clear_initial_guess(scenario, base_problem, end_amplitude, states)
                values = guess.values.copy()
                values[:, 1:] = 0.0
                controls = ResetService.pinned_controls(scenario, end_amplitude, values)
            else:
                if initial_controls is not None:
                    start = ResetService.pinned_controls(scenario, end_amplitude, initial_controls.values)
                elif mode is ResetMode.GRAPE_PENALIZED:
                    # the unpenalized optimum is the starting point of the penalized run
                    unpenalized = ResetService.run_reset(scenario, ResetMode.GRAPE, optimizer_cfg=optimizer_cfg,
                                                         cfg=cfg, workers=workers, poly_degree=poly_degree)
                    start = ResetService.pinned_controls(scenario, end_amplitude, unpenalized.pixel_controls)
                else:
                    start = ResetService.clear_initial_guess(scenario, base_problem, end_amplitude, states)
                problem = base_problem if beta == 0 else ResetService.build_problem(
                    scenario, states, beta=beta, cfg=cfg, workers=workers)
                controls, state = OptimizerService.optimize(problem, start, optimizer_cfg)
                history, stalled = state.history, state.stalled

        return ResetService._report(mode, scenario, states, controls, beta, eps_one, started, history, stalled,
                                    cfg, workers, poly_degree)

    @staticmethod
    def simulate(scenario, pixel_values=None, cfg=None, workers=1):
        """Forward run of a given pixel pulse after the measurement; no pulse means passive decay."""
        started = time.perf_counter()
        eps, eps_one = ResetService.drive_amplitude(scenario)
        states, _ = ResetService.prepare_measurement_state(scenario, eps, cfg)
        if pixel_values is None:
            mode = ResetMode.PASSIVE
            pixel_values = np.zeros((scenario.n_pixels, scenario.n_controls))
        else:
            mode = None
        controls = ControlGrid(pixel_dt=scenario.pixel_dt, values=pixel_values)
        return ResetService._report(mode, scenario, states, controls, 0.0, eps_one, started, [], False, cfg,
                                    workers, Config.POLY_DEGREE)

    @staticmethod
    def _report(mode, scenario, states, controls, beta, eps_one, started, history, stalled, cfg, workers,
                poly_degree):
        report_problem = ResetService.build_problem(scenario, states, beta=beta, include_penalty=True, cfg=cfg,
                                                    workers=workers)
        result = GrapeService.evaluate(report_problem, controls)
        series = ResetService._branch_series(scenario.model, report_problem, result)
        fitted_series, fitted_controls = [], None
        if mode in (ResetMode.GRAPE, ResetMode.GRAPE_PENALIZED):
            fitted = FilterService.fit_polynomial(controls, poly_degree)
            fitted_controls = fitted.values
            fitted_series = ResetService._branch_series(scenario.model, report_problem,
                                                        GrapeService.evaluate(report_problem, fitted),
                                                        check_truncation=False)
        passive_monotonic = None
        if mode is ResetMode.PASSIVE:
            passive_monotonic = all(bool(np.all(np.diff(s.photon_number) <= MONOTONIC_TOL)) for s in series)
            if not passive_monotonic:
                logger.warning('passive decay of the photon number is not monotonic')
        report = ResetReport(
            mode=mode,
            scenario=scenario,
            times=result.trajectories[0].times(),
            branches=series,
            pixel_controls=controls.values.copy(),
            subpixel_controls=FilterService.apply_filter(report_problem.transfer, controls).values,
            pixel_dt=scenario.pixel_dt,
            subpixel_dt=scenario.subpixel_dt,
            phi0=result.phi0,
            phi_p=result.phi_p,
            history=history,
            rk_steps=result.rk_steps,
            wall_time=time.perf_counter() - started,
            stalled=stalled,
            eps_one_photon=eps_one,
            calibration_method=scenario.calibration_method.value,
            fitted_branches=fitted_series,
            fitted_pixel_controls=fitted_controls,
            passive_monotonic=passive_monotonic,
        )
        logger.info('reset run done: final ⟨n⟩ %s, max ⟨n⟩ %s, %.1f s',
                    {k: f'{v:.3e}' for k, v in report.final_photons.items()},
                    {k: f'{v:.2f}' for k, v in report.max_photons.items()}, report.wall_time)
        return report

    @staticmethod
    def _branch_series(model, problem, result, check_truncation=True):
        number = ResetService.number_operator(model)
        series = []
        for branch, traj in zip(problem.branches, result.trajectories):
            photons = np.real(traj.expectation_series(number))
            leak = OperatorService.truncation_leak(traj.states)
            if leak > Config.TRUNCATION_LEAK_MAX and check_truncation:
                raise TruncationError(f'{branch.label} branch leaks {leak:.2e} into the top Fock levels; '
                                      f'increase fock_dim beyond {model.fock_dim}', leak=leak)
            if leak > 0.1 * Config.TRUNCATION_LEAK_MAX:
                logger.warning('%s branch truncation leak %.2e is close to the limit', branch.label, leak)
            series.append(BranchSeries(label=branch.label, photon_number=photons, final_photon=float(photons[-1]),
                                       max_photon=float(photons.max()), truncation_leak=leak))
        return series
