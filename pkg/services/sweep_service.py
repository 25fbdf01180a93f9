"""Empirical speed limit of the reset: the shortest horizon GRAPE still succeeds at, per drive power."""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
from scipy import stats

from models.reset import ResetMode, ResetScenario, SweepPoint, SweepResult
from services.calibration_service import CalibrationService
from services.reset_service import ResetService
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

FAILURE_PHOTONS = 1e-2
DISPARITY_RATIO = 10.0
# below this the branch ratio compares integrator noise, not branching
DISPARITY_FLOOR = 1e-4


def is_failure(final_ground, final_excited):
    """A point fails when either branch keeps > 1e-2 photons or the branches differ by more than 10x."""
    high = max(final_ground, final_excited)
    low = min(final_ground, final_excited)
    if high > FAILURE_PHOTONS:
        return True
    if high <= DISPARITY_FLOOR:
        return False
    return low <= 0 or high > DISPARITY_RATIO * low


def _run_point(job):
    # module-level so worker processes can unpickle it
    scenario, optimizer_cfg, cfg = job
    report = ResetService.run_reset(scenario, ResetMode.GRAPE, optimizer_cfg=optimizer_cfg, cfg=cfg)
    finals = report.final_photons
    ground, excited = finals['ground'], finals['excited']
    return SweepPoint(p_norm=scenario.p_norm, horizon=scenario.horizon, final_ground=ground,
                      final_excited=excited, failed=is_failure(ground, excited), stalled=report.stalled)


class SweepService:
    @staticmethod
    def speed_limit_sweep(model, p_norm_list, horizon_list, jobs=1, optimizer_cfg=None, cfg=None,
                          **scenario_fields):
        if not p_norm_list or not horizon_list:
            raise ConfigError('p_norm_list and horizon_list must be non-empty')
        template = ResetScenario(model=model, p_norm=p_norm_list[0], horizon=horizon_list[0], **scenario_fields)
        if template.eps_one_photon is None:
            # calibrate once, not once per grid point
            eps_one = CalibrationService.calibrate_one_photon(model, template.calibration_method).eps_one_photon
            template = replace(template, eps_one_photon=eps_one)
        jobs_list = [(replace(template, p_norm=float(p), horizon=float(t)), optimizer_cfg, cfg)
                     for p in p_norm_list for t in horizon_list]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                points = list(pool.map(_run_point, jobs_list))
        else:
            points = [_run_point(job) for job in jobs_list]
        for point in points:
            logger.info('sweep point P_norm=%.3g T=%.1f ns: final ⟨n⟩ g=%.3e e=%.3e%s', point.p_norm,
                        point.horizon, point.final_ground, point.final_excited, ' (failed)' if point.failed else '')
        return SweepService.summarize(points)

    @staticmethod
    def speed_limits(points):
        """Smallest non-failing horizon per drive power (None when every horizon fails)."""
        limits = {}
        for p in sorted({point.p_norm for point in points}):
            passing = sorted(point.horizon for point in points if point.p_norm == p and not point.failed)
            limits[p] = passing[0] if passing else None
        return limits

    @staticmethod
    def summarize(points):
        limits = SweepService.speed_limits(points)
        fit_points = [(p, t) for p, t in limits.items() if t is not None]
        alpha = alpha_stderr = prefactor = float('nan')
        if len(fit_points) >= 2:
            fit = stats.linregress(np.log([p for p, _ in fit_points]), np.log([t for _, t in fit_points]))
            alpha, alpha_stderr, prefactor = float(fit.slope), float(fit.stderr), math.exp(fit.intercept)
            logger.info('speed limit T* ∝ P_norm^α: α = %.3f ± %.3f', alpha, alpha_stderr)
        horizons = [t for _, t in fit_points]
        monotonic = all(b >= a for a, b in zip(horizons, horizons[1:]))
        if not monotonic:
            logger.warning('speed limit is not monotonic in drive power: %s', limits)
        return SweepResult(points=points, speed_limits=limits, alpha=alpha, alpha_stderr=alpha_stderr,
                           prefactor=prefactor, monotonic=monotonic)
