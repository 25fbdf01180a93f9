"""Quasi-Newton ascent on the unpinned controls.

BFGS (full inverse-Hessian estimate) or L-BFGS (two-loop recursion) on −Φ,
with a strong-Wolfe line search and an Armijo backtracking fallback. Curvature
pairs with yᵀs ≤ 1e-12‖y‖‖s‖ are skipped so the inverse-Hessian estimate stays
positive definite.
"""
import logging
import warnings

import numpy as np
from scipy import optimize

from config import Config
from models.problem import IterationRecord, OptimizerConfig, OptimizerKind, OptimizerState
from services.grape_service import GrapeService
from utils.errors import IntegrationError, OptimizationAborted

logger = logging.getLogger(__name__)

CURVATURE_EPS = 1e-12


class _Objective:
    """−Φ and its gradient over the free control vector, memoized on x."""

    def __init__(self, problem, controls):
        self.problem = problem
        self.controls = controls
        self.mask = controls.free_mask()
        self._cache = {}
        self.evaluations = 0

    def result(self, x):
        key = x.tobytes()
        if key not in self._cache:
            if len(self._cache) > 8:
                self._cache.clear()
            try:
                self._cache[key] = GrapeService.compute_gradient(self.problem, self.controls.with_free_vector(x))
            except IntegrationError as err:
                logger.debug('trial point rejected: %s', err)
                self._cache[key] = None
            self.evaluations += 1
        return self._cache[key]

    def f(self, x):
        res = self.result(x)
        return np.inf if res is None else -res.phi

    def grad(self, x):
        res = self.result(x)
        if res is None:
            return np.full(x.shape, np.nan)
        return -res.pixel_gradient[self.mask]


class OptimizerService:
    @staticmethod
    def optimize(problem, initial_controls, cfg=None, callback=None):
        """Maximize Φ over the unpinned pixels; returns (best controls, OptimizerState)."""
        cfg = cfg or OptimizerConfig()
        objective = _Objective(problem, initial_controls)
        state = OptimizerState(rng_seed=cfg.seed)
        x = initial_controls.free_vector()
        res = objective.result(x)
        if res is None:
            raise OptimizationAborted('initial controls cannot be propagated')
        OptimizerService._check_finite(res.phi, 0)
        fx = -res.phi
        g = -res.pixel_gradient[objective.mask]
        best_x, best = x.copy(), res
        state.best_phi = res.phi
        state.history.append(IterationRecord(0, res.phi, res.phi0, res.phi_p, OptimizerService._inf(g), 0.0,
                                             res.rk_steps))
        n = x.size
        if cfg.kind is OptimizerKind.BFGS:
            state.inverse_hessian = np.eye(n) * OptimizerService._initial_scale(x, g, cfg)
        prev_fx = None

        while state.iteration < cfg.max_iters:
            if n == 0 or OptimizerService._inf(g) < cfg.tol_g:
                state.converged = True
                state.stop_reason = 'gradient tolerance'
                break
            p = OptimizerService._direction(state, g, x, cfg)
            alpha, restarted, unresolvable = None, False, False
            while True:
                alpha = OptimizerService._wolfe_step(objective, x, p, g, fx, prev_fx, cfg)
                if alpha is None:
                    alpha, unresolvable = OptimizerService._backtrack(objective, x, p, g, fx, cfg)
                if alpha is not None or restarted:
                    break
                # one restart from scaled steepest ascent before declaring a stall
                logger.info('line search failed at iteration %d; restarting from steepest ascent',
                            state.iteration)
                OptimizerService._reset_curvature(state, x, g, cfg)
                p = OptimizerService._direction(state, g, x, cfg)
                prev_fx = None
                restarted = True
            if alpha is None:
                if unresolvable:
                    # every increase still on offer is below tol_f
                    state.converged = True
                    state.stop_reason = 'function tolerance'
                    break
                state.stalled = True
                state.stop_reason = 'line search failed'
                logger.warning('optimizer stalled at iteration %d (Φ = %.6e)', state.iteration, best.phi)
                break
            x_new = x + alpha * p
            res_new = objective.result(x_new)
            if res_new is None:
                state.stalled = True
                state.stop_reason = 'accepted point not propagatable'
                break
            OptimizerService._check_finite(res_new.phi, state.iteration + 1)
            g_new = -res_new.pixel_gradient[objective.mask]
            OptimizerService._update_curvature(state, x_new - x, g_new - g, cfg)
            prev_fx, fx = fx, -res_new.phi
            x, g = x_new, g_new
            state.iteration += 1
            step_len = float(np.linalg.norm(alpha * p))
            state.history.append(IterationRecord(state.iteration, res_new.phi, res_new.phi0, res_new.phi_p,
                                                 OptimizerService._inf(g), step_len, res_new.rk_steps))
            if res_new.phi > best.phi:
                best_x, best = x.copy(), res_new
                state.best_phi = res_new.phi
            if state.iteration % Config.LOG_EVERY == 0:
                logger.info('iteration %d: Φ = %.8f, Φ₀ = %.8f, Φ_p = %.4e, |g|∞ = %.2e',
                            state.iteration, res_new.phi, res_new.phi0, res_new.phi_p, OptimizerService._inf(g))
            if callback is not None:
                callback(state, res_new)
            if abs(prev_fx - fx) < cfg.tol_f:
                state.converged = True
                state.stop_reason = 'function tolerance'
                break
        else:
            state.stop_reason = 'max iterations'
        state.evaluations = objective.evaluations
        logger.info('optimizer finished after %d iterations (%s): Φ = %.8f',
                    state.iteration, state.stop_reason, best.phi)
        return initial_controls.with_free_vector(best_x), state

    @staticmethod
    def _inf(g):
        return float(np.max(np.abs(g))) if g.size else 0.0

    @staticmethod
    def _check_finite(phi, iteration):
        if not np.isfinite(phi):
            raise OptimizationAborted(f'performance index is {phi} at iteration {iteration}')

    @staticmethod
    def _wolfe_step(objective, x, p, g, fx, prev_fx, cfg):
        with warnings.catch_warnings():
            warnings.filterwarnings('ignore', message='The line search algorithm', category=RuntimeWarning)
            return optimize.line_search(objective.f, objective.grad, x, p, gfk=g, old_fval=fx,
                                        old_old_fval=prev_fx, c1=cfg.c1, c2=cfg.c2,
                                        maxiter=cfg.line_search_trials)[0]

    @staticmethod
    def _backtrack(objective, x, p, g, fx, cfg):
        """Armijo backtracking from α = 1; returns (α or None, whether the search hit the tol_f floor)."""
        slope = float(g @ p)
        if slope >= 0:
            return None, False
        alpha = 1.0
        for _ in range(cfg.line_search_trials):
            if -alpha * slope < cfg.tol_f:
                return None, True
            if objective.f(x + alpha * p) <= fx + cfg.c1 * alpha * slope:
                logger.debug('Wolfe search failed; backtracking accepted α = %.3e', alpha)
                return alpha, False
            alpha *= 0.5
        return None, False

    @staticmethod
    def _initial_scale(x, g, cfg):
        """Inverse-Hessian scale of the first trial step.

        With `initial_step` set, the step's largest entry has that size; otherwise
        the step has unit norm (H₀ = I/‖g‖).
        """
        g_inf = OptimizerService._inf(g)
        if g_inf == 0.0:
            return 1.0
        if cfg.initial_step is not None:
            return cfg.initial_step / g_inf
        return 1.0 / float(np.linalg.norm(g))

    @staticmethod
    def _reset_curvature(state, x, g, cfg):
        state.pairs.clear()
        state.curvature_pairs = 0
        state.initial_scale = OptimizerService._initial_scale(x, g, cfg)
        if state.inverse_hessian is not None:
            state.inverse_hessian = np.eye(x.size) * state.initial_scale

    @staticmethod
    def _direction(state, g, x, cfg):
        if cfg.kind is OptimizerKind.BFGS:
            p = -state.inverse_hessian @ g
        else:
            p = -OptimizerService._two_loop(state, g, x, cfg)
        if p @ g >= 0:
            # lost descent; fall back to scaled steepest descent on −Φ
            OptimizerService._reset_curvature(state, x, g, cfg)
            p = -state.initial_scale * g
        return p

    @staticmethod
    def _two_loop(state, g, x, cfg):
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(state.pairs):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if state.pairs:
            s, y, _ = state.pairs[-1]
            gamma = (s @ y) / (y @ y)
        else:
            gamma = state.initial_scale or OptimizerService._initial_scale(x, g, cfg)
        r = gamma * q
        for (s, y, rho), a in zip(state.pairs, reversed(alphas)):
            b = rho * (y @ r)
            r += s * (a - b)
        return r

    @staticmethod
    def _update_curvature(state, s, y, cfg):
        sy = float(s @ y)
        if sy <= CURVATURE_EPS * np.linalg.norm(s) * np.linalg.norm(y):
            state.skipped_pairs += 1
            return
        rho = 1.0 / sy
        if cfg.kind is OptimizerKind.LBFGS:
            state.pairs.append((s, y, rho))
            state.curvature_pairs += 1
            if len(state.pairs) > cfg.memory:
                state.pairs.pop(0)
            return
        H = state.inverse_hessian
        if state.curvature_pairs == 0:
            # first accepted pair: rescale H₀ = (yᵀs / yᵀy) I before updating
            H = np.eye(s.size) * (sy / float(y @ y))
        Hy = H @ y
        H = H + (rho * rho * (y @ Hy) + rho) * np.outer(s, s) - rho * (np.outer(Hy, s) + np.outer(s, Hy))
        state.inverse_hessian = 0.5 * (H + H.T)
        state.curvature_pairs += 1
