"""Stepwise Runge-Kutta propagation of the master equation and its adjoint.

The generator is constant on each subpixel. Every subpixel is integrated as a
separate initial value problem whose initial condition is the snapshot at its
left (forward) or right (backward) boundary; snapshots are kept at every
boundary because the gradient pairs costates with states subpixel by subpixel.
"""
import logging

import numpy as np

from models.operator import as_matrix
from models.propagation import Direction, IntegrationMethod, IntegratorConfig, Trajectory
from services.operator_service import OperatorService
from utils.errors import DivergenceError, IntegrationError

logger = logging.getLogger(__name__)

# Dormand-Prince 5(4) tableau; the 5th-order solution is propagated (FSAL).
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


class PropagationService:
    @staticmethod
    def propagate_forward(initial, gen, cfg=None):
        """ρ at every subpixel boundary, states[n] ≈ ρ(n·δt)."""
        cfg = cfg or IntegratorConfig()
        rho0 = as_matrix(initial)
        if rho0.shape != (gen.dim, gen.dim):
            raise IntegrationError(f'initial state shape {rho0.shape} does not match generator dim {gen.dim}')
        jumps = [(ch.rate, ch.collapse.entries) for ch in gen.channels if ch.rate > 0]
        n_sub = gen.n_subpixels
        states = np.empty((n_sub + 1, gen.dim, gen.dim), dtype=np.complex128)
        states[0] = rho0
        y = rho0.copy()
        accepted = rejected = 0
        for n in range(n_sub):
            h_eff = gen.effective_hamiltonian(n)

            def rhs(x, h_eff=h_eff):
                return OperatorService.apply_generator(x, h_eff, jumps)

            y, acc, rej = PropagationService._integrate(y, rhs, gen.subpixel_dt, cfg, n)
            accepted += acc
            rejected += rej
            if cfg.rehermitize_every and (n + 1) % cfg.rehermitize_every == 0:
                y = OperatorService.hermitize(y)
            if not np.all(np.isfinite(y)):
                raise DivergenceError(f'state diverged in subpixel {n}', subpixel=n)
            states[n + 1] = y
        trace_drift = float(np.max(np.abs(np.trace(states, axis1=1, axis2=2) - np.trace(rho0))))
        if trace_drift > 1e-6:
            logger.warning('forward trace drift %.2e exceeds 1e-6', trace_drift)
        logger.debug('forward pass: %d subpixels, %d RK steps (%d rejected)', n_sub, accepted, rejected)
        return Trajectory(states=states, rk_step_count=accepted, direction=Direction.FORWARD,
                          rejected_steps=rejected, subpixel_dt=gen.subpixel_dt)

    @staticmethod
    def propagate_backward(target, gen, cfg=None, source=None, visitor=None):
        """λ at every boundary from λ(T) = target, integrating dλ/dτ = L†λ in τ = T − t.

        `source` is added to the costate at every boundary n < M (the modified
        backward pass of time-integrated penalties). `visitor(n, λₙ)` is called
        at every boundary from M down to 0; with `cfg.streaming` the snapshots
        are not stored and `states` is None.
        """
        cfg = cfg or IntegratorConfig()
        lam = as_matrix(target).copy()
        if lam.shape != (gen.dim, gen.dim):
            raise IntegrationError(f'target shape {lam.shape} does not match generator dim {gen.dim}')
        src = None if source is None else as_matrix(source)
        jumps = [(ch.rate, ch.collapse.entries) for ch in gen.channels if ch.rate > 0]
        n_sub = gen.n_subpixels
        states = None
        if not cfg.streaming:
            states = np.empty((n_sub + 1, gen.dim, gen.dim), dtype=np.complex128)
            states[n_sub] = lam
        if visitor is not None:
            visitor(n_sub, lam)
        accepted = rejected = 0
        for n in range(n_sub - 1, -1, -1):
            h_eff = gen.effective_hamiltonian(n)

            def rhs(x, h_eff=h_eff):
                return OperatorService.apply_adjoint_generator(x, h_eff, jumps)

            lam, acc, rej = PropagationService._integrate(lam, rhs, gen.subpixel_dt, cfg, n)
            accepted += acc
            rejected += rej
            if src is not None:
                lam = lam + src
            if cfg.rehermitize_every and (n_sub - n) % cfg.rehermitize_every == 0:
                lam = OperatorService.hermitize(lam)
            if not np.all(np.isfinite(lam)):
                raise DivergenceError(f'costate diverged in subpixel {n}', subpixel=n)
            if states is not None:
                states[n] = lam
            if visitor is not None:
                visitor(n, lam)
        logger.debug('backward pass: %d subpixels, %d RK steps (%d rejected)', n_sub, accepted, rejected)
        return Trajectory(states=states, rk_step_count=accepted, direction=Direction.BACKWARD,
                          rejected_steps=rejected, subpixel_dt=gen.subpixel_dt)

    @staticmethod
    def rk_step_budget(traj):
        return traj.rk_step_count

    @staticmethod
    def _integrate(y, rhs, duration, cfg, subpixel):
        if cfg.method is IntegrationMethod.RK4:
            return PropagationService._integrate_rk4(y, rhs, duration, cfg, subpixel)
        return PropagationService._integrate_dopri(y, rhs, duration, cfg, subpixel)

    @staticmethod
    def _integrate_rk4(y, rhs, duration, cfg, subpixel):
        steps = cfg.fixed_substeps
        if steps > cfg.max_steps_per_subpixel:
            raise IntegrationError(f'{steps} fixed substeps exceed the per-subpixel budget', subpixel=subpixel)
        h = duration / steps
        for _ in range(steps):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return y, steps, 0

    @staticmethod
    def _integrate_dopri(y, rhs, duration, cfg, subpixel):
        # the first trial step spans the whole subpixel
        h = duration
        t = 0.0
        accepted = rejected = 0
        k1 = rhs(y)
        while duration - t > 1e-12 * duration:
            if accepted + rejected >= cfg.max_steps_per_subpixel:
                raise IntegrationError(
                    f'step budget of {cfg.max_steps_per_subpixel} exhausted in subpixel {subpixel}',
                    subpixel=subpixel)
            h = min(h, duration - t)
            ks = [k1]
            for i in range(1, 6):
                incr = _A[i][0] * ks[0]
                for j in range(1, i):
                    if _A[i][j]:
                        incr = incr + _A[i][j] * ks[j]
                ks.append(rhs(y + h * incr))
            incr = _B[0] * ks[0]
            for j in range(2, 6):
                incr = incr + _B[j] * ks[j]
            y_new = y + h * incr
            k7 = rhs(y_new)
            ks.append(k7)
            err_vec = _E[0] * ks[0]
            for j in range(2, 7):
                err_vec = err_vec + _E[j] * ks[j]
            err_vec *= h
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((np.abs(err_vec) / scale) ** 2)))
            if not np.isfinite(err):
                raise DivergenceError(f'non-finite error estimate in subpixel {subpixel}', subpixel=subpixel)
            if err <= 1.0:
                t += h
                y = y_new
                k1 = k7
                accepted += 1
                factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
            else:
                rejected += 1
                factor = max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            h *= factor
        return y, accepted, rejected
