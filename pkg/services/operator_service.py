"""Dense operator algebra and the Lindblad generator acting on d x d matrices.

The generator is never assembled as a d²×d² superoperator here; both the
forward generator and its Hilbert-Schmidt adjoint are evaluated with a handful
of d x d matrix products using the effective non-Hermitian Hamiltonian
H_eff = H − (i/2) Σⱼ γⱼ aⱼ†aⱼ.
"""
import math

import numpy as np

from models.operator import Operator, as_matrix
from utils.errors import DimensionError, ShapeError


class OperatorService:
    @staticmethod
    def annihilation(dim):
        if dim < 2:
            raise DimensionError(f'ladder operators need dim >= 2, got {dim}')
        return Operator(np.diag(np.sqrt(np.arange(1, dim, dtype=np.float64)), k=1).astype(np.complex128))

    @staticmethod
    def creation(dim):
        return OperatorService.annihilation(dim).dag

    @staticmethod
    def number(dim):
        return Operator(np.diag(np.arange(dim, dtype=np.float64)).astype(np.complex128), hermitian=True)

    @staticmethod
    def identity(dim):
        return Operator(np.eye(dim, dtype=np.complex128), hermitian=True)

    @staticmethod
    def coherent_state(dim, alpha):
        """|α⟩⟨α| from the truncated exponential series, renormalized."""
        n = np.arange(dim)
        log_fact = np.array([math.lgamma(k + 1) for k in n])
        amplitudes = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * log_fact) * np.power(complex(alpha), n)
        amplitudes /= np.linalg.norm(amplitudes)
        return np.outer(amplitudes, amplitudes.conj())

    @staticmethod
    def _check_dims(*matrices):
        dims = {m.shape for m in matrices}
        if len(dims) != 1:
            raise ShapeError(f'dimension mismatch: {sorted(dims)}')
        shape = dims.pop()
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ShapeError(f'expected square matrices, got {shape}')

    @staticmethod
    def _jumps(channels):
        return [(channel.rate, as_matrix(channel.collapse)) for channel in channels if channel.rate > 0]

    @staticmethod
    def effective_hamiltonian(H, channels):
        h = as_matrix(H).copy()
        for rate, a in OperatorService._jumps(channels):
            h -= 0.5j * rate * (a.conj().T @ a)
        return h

    @staticmethod
    def lindblad_rhs(state, H, channels):
        """−i[H,ρ] + Σⱼ γⱼ (aⱼ ρ aⱼ† − ½{aⱼ†aⱼ, ρ})."""
        rho = as_matrix(state)
        h = as_matrix(H)
        OperatorService._check_dims(rho, h, *[as_matrix(c.collapse) for c in channels])
        h_eff = OperatorService.effective_hamiltonian(h, channels)
        return OperatorService.apply_generator(rho, h_eff, OperatorService._jumps(channels))

    @staticmethod
    def lindblad_adjoint_rhs(costate, H, channels):
        """+i[H,λ] + Σⱼ γⱼ (aⱼ† λ aⱼ − ½{aⱼ†aⱼ, λ})."""
        lam = as_matrix(costate)
        h = as_matrix(H)
        OperatorService._check_dims(lam, h, *[as_matrix(c.collapse) for c in channels])
        h_eff = OperatorService.effective_hamiltonian(h, channels)
        return OperatorService.apply_adjoint_generator(lam, h_eff, OperatorService._jumps(channels))

    @staticmethod
    def apply_generator(rho, h_eff, jumps):
        out = -1j * (h_eff @ rho - rho @ h_eff.conj().T)
        for rate, a in jumps:
            out += rate * (a @ rho @ a.conj().T)
        return out

    @staticmethod
    def apply_adjoint_generator(lam, h_eff, jumps):
        out = 1j * (h_eff.conj().T @ lam - lam @ h_eff)
        for rate, a in jumps:
            out += rate * (a.conj().T @ lam @ a)
        return out

    @staticmethod
    def commutator(a, b):
        a = as_matrix(a)
        b = as_matrix(b)
        return a @ b - b @ a

    @staticmethod
    def expectation(obs, state):
        o = as_matrix(obs)
        rho = as_matrix(state)
        OperatorService._check_dims(o, rho)
        # Tr(A ρ) without forming the product
        return complex(np.einsum('ij,ji->', o, rho))

    @staticmethod
    def hs_inner(a, b):
        """Hilbert-Schmidt inner product Tr(A† B)."""
        return complex(np.vdot(as_matrix(a), as_matrix(b)))

    @staticmethod
    def hermitize(x):
        return 0.5 * (x + x.conj().T)

    @staticmethod
    def hermiticity_error(x):
        return float(np.max(np.abs(x - x.conj().T)))

    @staticmethod
    def trace_distance(a, b):
        diff = OperatorService.hermitize(as_matrix(a) - as_matrix(b))
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))

    @staticmethod
    def truncation_leak(state, levels=2):
        """Population of the top `levels` Fock levels of one state or a stack."""
        rho = np.asarray(getattr(state, 'entries', state))
        diag = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
        return float(np.max(np.sum(diag[..., -levels:], axis=-1)))
