from dataclasses import dataclass, field, replace

import numpy as np

from utils.errors import GridMismatchError, ShapeError


@dataclass
class ControlGrid:
    """Piecewise-constant controls uₖ(j) on N pixels of duration Δt (rad/ns)."""
    pixel_dt: float
    values: np.ndarray
    # per control: (first pixel pinned, last pixel pinned)
    pinned: tuple = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ShapeError(f'control values must be N x R, got shape {values.shape}')
        if not self.pinned:
            self.pinned = tuple((False, False) for _ in range(values.shape[1]))
        self.pinned = tuple((bool(first), bool(last)) for first, last in self.pinned)
        if len(self.pinned) != values.shape[1]:
            raise ShapeError(f'{len(self.pinned)} pin pairs for {values.shape[1]} controls')
        if any(first or last for first, last in self.pinned) and values.shape[0] < 2:
            raise GridMismatchError('pinning needs at least two pixels')
        self.values = values

    @property
    def n_pixels(self):
        return self.values.shape[0]

    @property
    def n_controls(self):
        return self.values.shape[1]

    @property
    def horizon(self):
        return self.n_pixels * self.pixel_dt

    def free_mask(self):
        mask = np.ones(self.values.shape, dtype=bool)
        for k, (first, last) in enumerate(self.pinned):
            if first:
                mask[0, k] = False
            if last:
                mask[-1, k] = False
        return mask

    def free_vector(self):
        return self.values[self.free_mask()].copy()

    def with_free_vector(self, vector):
        values = self.values.copy()
        values[self.free_mask()] = vector
        return replace(self, values=values)

    def times(self):
        return np.arange(self.n_pixels) * self.pixel_dt


@dataclass
class SubpixelGrid:
    subpixel_dt: float
    values: np.ndarray

    @property
    def n_subpixels(self):
        return self.values.shape[0]

    def times(self):
        return np.arange(self.n_subpixels) * self.subpixel_dt


@dataclass(frozen=True)
class TransferMatrix:
    """Tₙⱼ (shared, M x N) or Tₖₙⱼ (per control, R x M x N)."""
    entries: np.ndarray
    pixel_dt: float
    subpixel_dt: float
    bandwidth_3db: np.ndarray
    reference_bandwidth: np.ndarray
    sample_offset: float = 0.5

    @property
    def per_control(self):
        return self.entries.ndim == 3

    @property
    def n_subpixels(self):
        return self.entries.shape[-2]

    @property
    def n_pixels(self):
        return self.entries.shape[-1]

    def matrix(self, k):
        return self.entries[k] if self.per_control else self.entries
