"""One-photon drive calibration: the amplitude √P₁ₚₕ whose steady state holds one photon.

Both methods average the mean photon number over the two qubit branches.
"""
import logging
import math

import numpy as np
from scipy import optimize

from config import Config
from models.operator import DensityState
from models.propagation import IntegratorConfig
from models.reset import CalibrationMethod, CalibrationResult, QubitState
from services.propagation_service import PropagationService
from utils.errors import CalibrationError

logger = logging.getLogger(__name__)

# target relative accuracy of the root on ε
_XTOL = 1e-10
_BRACKET_EXPANSIONS = 6


class CalibrationService:
    @staticmethod
    def steady_state_photon_analytic(model, qubit_state, eps):
        """n̄ = ε² / ((δ ± χ)² + (κ/2)²), Kerr ignored."""
        detuning = model.branch_detuning(qubit_state)
        return eps ** 2 / (detuning ** 2 + (model.kappa / 2.0) ** 2)

    @staticmethod
    def ring_up_photon_analytic(model, qubit_state, eps, duration):
        """Photon number after driving vacuum for `duration`: n̄·|1 − e^{−(iΔ + κ/2)t}|², Kerr ignored."""
        rate = 1j * model.branch_detuning(qubit_state) + model.kappa / 2.0
        transient = abs(1.0 - np.exp(-rate * duration)) ** 2
        return CalibrationService.steady_state_photon_analytic(model, qubit_state, eps) * transient

    @staticmethod
    def calibrate_one_photon(model, method=CalibrationMethod.ANALYTIC, settle_time=None, cfg=None):
        method = CalibrationMethod(method)
        if method is CalibrationMethod.ANALYTIC:
            result = CalibrationService._calibrate_analytic(model)
        else:
            result = CalibrationService._calibrate_numeric(model, settle_time, cfg)
        logger.info('one-photon amplitude (%s): 2π × %.6f MHz, residual %.2e', method.value,
                    result.eps_one_photon / (2 * math.pi) * 1e3, result.residual)
        return result

    @staticmethod
    def _calibrate_analytic(model):
        # mean over branches of 1/((δ ± χ)² + κ²/4), then n̄ = ε² · mean = 1
        inverse = np.mean([1.0 / (model.branch_detuning(qs) ** 2 + (model.kappa / 2.0) ** 2)
                           for qs in QubitState])
        eps = 1.0 / math.sqrt(inverse)
        residual = CalibrationService.branch_averaged_analytic(model, eps) - 1.0
        return CalibrationResult(eps_one_photon=eps, method=CalibrationMethod.ANALYTIC, residual=residual)

    @staticmethod
    def branch_averaged_analytic(model, eps):
        return float(np.mean([CalibrationService.steady_state_photon_analytic(model, qs, eps)
                              for qs in QubitState]))

    @staticmethod
    def long_time_photon_number(model, eps, settle_time=None, cfg=None):
        """Branch-averaged ⟨a†a⟩ after driving vacuum at constant ε for `settle_time` (default 20/κ)."""
        # imported here: reset_service depends on this module for its calibration step
        from services.reset_service import ResetService

        settle_time = settle_time or Config.CALIBRATION_KAPPA_TIMES / model.kappa
        cfg = cfg or IntegratorConfig()
        # the drive is constant, so coarse subpixels of 1/(2κ) leave the stepping to the integrator
        n_sub = max(1, int(math.ceil(2.0 * settle_time * model.kappa)))
        dt = settle_time / n_sub
        vacuum = DensityState.fock(model.fock_dim, 0)
        values = []
        for qs in QubitState:
            drift, controls = ResetService.build_branch_hamiltonians(model, qs)
            amplitudes = np.zeros((n_sub, len(controls)))
            amplitudes[:, 0] = eps
            gen = ResetService.generator(model, drift, controls, amplitudes, dt)
            traj = PropagationService.propagate_forward(vacuum, gen, cfg)
            values.append(float(np.real(np.trace(ResetService.number_operator(model).entries @ traj.states[-1]))))
        return float(np.mean(values))

    @staticmethod
    def _calibrate_numeric(model, settle_time, cfg):
        guess = CalibrationService._calibrate_analytic(model).eps_one_photon
        trace = []

        def excess(eps):
            value = CalibrationService.long_time_photon_number(model, eps, settle_time, cfg) - 1.0
            trace.append((float(eps), float(value)))
            logger.debug('calibration scan: ε = %.6e rad/ns, n̄ − 1 = %.3e', eps, value)
            return value

        lo, hi = 0.0, 2.0 * guess
        f_lo = -1.0
        f_hi = excess(hi)
        expansions = 0
        while f_hi < 0 and expansions < _BRACKET_EXPANSIONS:
            lo, f_lo = hi, f_hi
            hi *= 2.0
            f_hi = excess(hi)
            expansions += 1
        if not (f_lo < 0 < f_hi) or not np.isfinite(f_hi):
            raise CalibrationError(f'could not bracket the one-photon amplitude below ε = {hi:.4e} rad/ns',
                                   scan_trace=trace)
        try:
            eps = optimize.brentq(excess, lo, hi, xtol=_XTOL * guess, rtol=1e-12)
        except (ValueError, RuntimeError) as err:
            raise CalibrationError(f'root-find failed: {err}', scan_trace=trace) from err
        residual = trace[-1][1] if trace and trace[-1][0] == eps else excess(eps)
        return CalibrationResult(eps_one_photon=float(eps), method=CalibrationMethod.NUMERIC,
                                 residual=float(residual), scan_trace=tuple(trace))
