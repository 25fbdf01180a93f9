from dataclasses import dataclass, field

import numpy as np

from utils.errors import DimensionError, ShapeError


def as_matrix(value):
    """Raw complex128 matrix behind an Operator/DensityState or array-like."""
    entries = getattr(value, 'entries', value)
    return np.asarray(entries, dtype=np.complex128)


@dataclass(frozen=True)
class Operator:
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ShapeError(f'operator must be square, got shape {entries.shape}')
        if entries.shape[0] < 1:
            raise DimensionError('operator dimension must be >= 1')
        if not np.all(np.isfinite(entries)):
            raise ShapeError('operator entries must be finite')
        if self.hermitian:
            scale = max(np.max(np.abs(entries)), 1e-300)
            if np.max(np.abs(entries - entries.conj().T)) > 1e-12 * scale:
                raise ShapeError('operator tagged Hermitian is not Hermitian')
        object.__setattr__(self, 'entries', entries)

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def dag(self):
        return Operator(self.entries.conj().T, hermitian=self.hermitian)


@dataclass(frozen=True)
class DensityState:
    """ρ, a costate λ, or a target σ. Costates skip the unit-trace check."""
    entries: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ShapeError(f'state must be square, got shape {entries.shape}')
        scale = max(np.max(np.abs(entries)), 1e-300)
        if np.max(np.abs(entries - entries.conj().T)) > 1e-10 * scale:
            raise ShapeError('state is not Hermitian')
        if self.normalized and abs(np.trace(entries) - 1.0) > 1e-8:
            raise ShapeError(f'state trace {np.trace(entries).real:.3e} is not 1')
        object.__setattr__(self, 'entries', entries)

    @property
    def dim(self):
        return self.entries.shape[0]

    @classmethod
    def fock(cls, dim, n):
        rho = np.zeros((dim, dim), dtype=np.complex128)
        rho[n, n] = 1.0
        return cls(rho)

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.entries).min())


@dataclass(frozen=True)
class DissipationChannel:
    rate: float
    collapse: Operator = field(repr=False)

    def __post_init__(self):
        if self.rate < 0:
            raise ShapeError(f'dissipation rate must be >= 0, got {self.rate}')
        if not isinstance(self.collapse, Operator):
            object.__setattr__(self, 'collapse', Operator(self.collapse))
