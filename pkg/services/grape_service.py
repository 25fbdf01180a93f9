"""Performance index, GRAPE gradient and the photon-number penalty.

For each weighted initial state: one forward pass caches ρₙ at every
subpixel boundary, one backward pass from the terminal costate yields
λₙ, and the subpixel gradient is

    ∂Φ/∂sₖ(n) = Re(−i·δt·Tr{λₙ [Hₖ, ρₙ₋₁]}) = Re(−i·δt·Tr{Hₖ [ρₙ₋₁, λₙ]}).

A time-integrated penalty ∫Tr(A ρ) dt is differentiated in the same backward
pass: the costate starts at c·σ − c·β·δt·A and receives −c·β·δt·A at every
boundary, which is the recursion ζ = A + L̂†ζ folded into λ.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from models.problem import GradientResult
from services.filter_service import FilterService
from services.propagation_service import PropagationService
from utils.errors import ConfigError, IntegrationError

logger = logging.getLogger(__name__)

IMAG_RESIDUE_TOL = 1e-10


class GrapeService:
    @staticmethod
    def evaluate_index(problem, controls):
        """Φ = Φ₀ − Σ β Φ_p for the given pixel controls."""
        return GrapeService.evaluate(problem, controls).phi

    @staticmethod
    def evaluate(problem, controls):
        """Forward passes only; returns a GradientResult with empty gradients."""
        amplitudes = FilterService.apply_filter(problem.transfer, controls).values
        passes = GrapeService._map_branches(problem, amplitudes, with_gradient=False)
        return GrapeService._assemble(problem, controls, passes, with_gradient=False)

    @staticmethod
    def compute_gradient(problem, controls):
        amplitudes = FilterService.apply_filter(problem.transfer, controls).values
        passes = GrapeService._map_branches(problem, amplitudes, with_gradient=True)
        return GrapeService._assemble(problem, controls, passes, with_gradient=True)

    @staticmethod
    def photon_penalty(trajectories, observable, subpixel_dt, weights=None):
        """Σᵢ wᵢ Σₙ₌₀..M δt·Tr(A ρᵢ(n·δt)), unnormalized (wᵢ = 1 by default)."""
        weights = weights if weights is not None else [1.0] * len(trajectories)
        total = 0.0
        for weight, traj in zip(weights, trajectories):
            total += weight * subpixel_dt * float(np.sum(np.real(traj.expectation_series(observable))))
        return total

    @staticmethod
    def photon_penalty_gradient(problem, controls, observable=None):
        """∂Φ_p/∂sₖ(n) of the unnormalized penalty, M x R, from one modified backward pass per state."""
        if observable is None:
            if not problem.penalties:
                raise ConfigError('problem has no penalty and no observable was given')
            observable = problem.penalties[0][0].observable
        obs = observable.entries
        dt = problem.subpixel_dt
        amplitudes = FilterService.apply_filter(problem.transfer, controls).values
        grad = np.zeros((amplitudes.shape[0], len(problem.control_ops)))
        for index, branch in enumerate(problem.branches):
            gen = problem.generator(branch, amplitudes)
            try:
                fwd = PropagationService.propagate_forward(branch.initial, gen, problem.integrator)
                branch_grad, _, _ = GrapeService._adjoint_gradient(problem, gen, fwd, dt * obs, dt * obs)
            except IntegrationError as err:
                raise err.with_state(index) from err
            grad += branch_grad
        return grad

    @staticmethod
    def _map_branches(problem, amplitudes, with_gradient):
        jobs = list(enumerate(problem.branches))

        def run(job):
            index, branch = job
            try:
                return GrapeService._branch_pass(problem, branch, amplitudes, with_gradient)
            except IntegrationError as err:
                raise err.with_state(index) from err

        if problem.workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=problem.workers) as pool:
                # map keeps submission order, so the reduction below is order-fixed
                return list(pool.map(run, jobs))
        return [run(job) for job in jobs]

    @staticmethod
    def _branch_pass(problem, branch, amplitudes, with_gradient):
        gen = problem.generator(branch, amplitudes)
        dt = problem.subpixel_dt
        fwd = PropagationService.propagate_forward(branch.initial, gen, problem.integrator)
        terminal = problem.objective.terminal_operator()
        overlap = float(np.real(np.einsum('ij,ji->', terminal, fwd.states[-1])))
        penalty_values = [dt * float(np.sum(np.real(fwd.expectation_series(penalty.observable))))
                          for penalty, _ in problem.penalties]
        result = {'overlap': overlap, 'penalties': penalty_values, 'forward': fwd,
                  'rk_steps': fwd.rk_step_count, 'gradient': None, 'imag': 0.0}
        if not with_gradient:
            return result
        c = branch.weight / problem.total_weight
        source = np.zeros_like(terminal, dtype=np.complex128)
        for penalty, beta in problem.penalties:
            source -= c * beta * dt * penalty.observable.entries
        grad, imag, back_steps = GrapeService._adjoint_gradient(problem, gen, fwd, c * terminal + source,
                                                                source if problem.penalties else None)
        result['gradient'] = grad
        result['imag'] = imag
        result['rk_steps'] += back_steps
        return result

    @staticmethod
    def _adjoint_gradient(problem, gen, fwd, terminal, source):
        """Subpixel gradient from one backward pass paired with the stored forward trajectory."""
        dt = gen.subpixel_dt
        rho = fwd.states
        controls = [op.entries for op in gen.control_ops]
        grad = np.zeros((gen.n_subpixels, len(controls)))
        imag = np.zeros(gen.n_subpixels)

        def accumulate(n, lam):
            if n == 0:
                return
            # Tr(λ [H, ρ]) = Tr(H [ρ, λ])
            comm = rho[n - 1] @ lam - lam @ rho[n - 1]
            for k, h in enumerate(controls):
                value = -1j * dt * np.einsum('ij,ji->', h, comm)
                grad[n - 1, k] = value.real
                imag[n - 1] = max(imag[n - 1], abs(value.imag))

        back = PropagationService.propagate_backward(terminal, gen, problem.integrator, source=source,
                                                     visitor=accumulate)
        residue = float(imag.max()) if imag.size else 0.0
        return grad, residue, back.rk_step_count

    @staticmethod
    def _assemble(problem, controls, passes, with_gradient):
        total_weight = problem.total_weight
        phi0 = 0.0
        phi_p = 0.0
        rk_steps = 0
        for branch, result in zip(problem.branches, passes):
            c = branch.weight / total_weight
            phi0 += c * result['overlap']
            rk_steps += result['rk_steps']
        penalty_terms = []
        for p, (_, beta) in enumerate(problem.penalties):
            value = sum(branch.weight / total_weight * result['penalties'][p]
                        for branch, result in zip(problem.branches, passes))
            penalty_terms.append((beta, value))
            phi_p += value
        phi = phi0 - sum(beta * value for beta, value in penalty_terms)
        n_sub = problem.transfer.n_subpixels
        n_ctrl = len(problem.control_ops)
        subpixel_grad = np.zeros((n_sub, n_ctrl))
        pixel_grad = np.zeros((controls.n_pixels, n_ctrl))
        imag = 0.0
        if with_gradient:
            for result in passes:
                subpixel_grad += result['gradient']
                imag = max(imag, result['imag'])
            scale = max(float(np.max(np.abs(subpixel_grad))) if subpixel_grad.size else 0.0, 1.0)
            if imag > IMAG_RESIDUE_TOL * scale:
                logger.warning('gradient has imaginary residue %.2e; states or costates lost Hermiticity', imag)
            pixel_grad = FilterService.backprop_gradient(problem.transfer, subpixel_grad, controls)
        return GradientResult(
            phi=phi, phi0=phi0, phi_p=phi_p,
            pixel_gradient=pixel_grad, subpixel_gradient=subpixel_grad, rk_steps=rk_steps,
            final_states=[result['forward'].states[-1] for result in passes],
            trajectories=[result['forward'] for result in passes],
            imag_residue=imag,
        )
