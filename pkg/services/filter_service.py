"""Gaussian bandwidth filter between pixel controls and subpixel amplitudes.

A filter F(ω) = exp(−ω²/ω₀²) has its 3 dB point at ω_B = ω₀·√(−ln(1/√2)), so
the reference bandwidth is ω₀ = ω_B / 0.58870501... The pulse is taken to be
zero before t = 0 and after t = T.
"""
import logging
import math

import numpy as np
from scipy import special

from models.controls import ControlGrid, SubpixelGrid, TransferMatrix
from utils.errors import GridMismatchError, ShapeError
from utils.helpers import subpixels_per_pixel

logger = logging.getLogger(__name__)

BANDWIDTH_RATIO = math.sqrt(-math.log(1.0 / math.sqrt(2.0)))


class FilterService:
    @staticmethod
    def reference_bandwidth(bandwidth_3db):
        return np.asarray(bandwidth_3db, dtype=np.float64) / BANDWIDTH_RATIO

    @staticmethod
    def build_gaussian_transfer(n_pixels, pixel_dt, subpixel_dt, bandwidth_3db, sample_offset=0.5):
        """Tₙⱼ = ½[erf(ω₀(tₙ − (j−1)Δt)/2) − erf(ω₀(tₙ − jΔt)/2)], tₙ = (n − 1 + offset)·δt.

        `bandwidth_3db` may be a scalar (one matrix shared by all controls) or
        one value per control (an R x M x N stack).
        """
        ratio = subpixels_per_pixel(pixel_dt, subpixel_dt)
        if ratio is None:
            raise GridMismatchError(f'pixel duration {pixel_dt} ns is not an integer multiple of '
                                    f'subpixel duration {subpixel_dt} ns')
        bandwidths = np.atleast_1d(np.asarray(bandwidth_3db, dtype=np.float64))
        if np.any(bandwidths <= 0):
            raise ShapeError('filter bandwidth must be positive')
        n_sub = n_pixels * ratio
        t = (np.arange(n_sub) + sample_offset) * subpixel_dt
        edges = np.arange(n_pixels + 1) * pixel_dt
        omega0 = FilterService.reference_bandwidth(bandwidths)
        mats = []
        for w0 in omega0:
            cdf = special.erf(w0 * (t[:, None] - edges[None, :]) / 2.0)
            mats.append(0.5 * (cdf[:, :-1] - cdf[:, 1:]))
        entries = mats[0] if np.ndim(bandwidth_3db) == 0 else np.stack(mats)
        return TransferMatrix(entries=entries, pixel_dt=pixel_dt, subpixel_dt=subpixel_dt,
                              bandwidth_3db=bandwidths, reference_bandwidth=omega0,
                              sample_offset=sample_offset)

    @staticmethod
    def transfer_integrand(omega, t, j, pixel_dt, omega0):
        """Integrand of the Fourier form of Tₙⱼ at sample time t, pixel j (1-based)."""
        centre = t - (2 * j - 1) * pixel_dt / 2.0
        if omega == 0.0:
            return pixel_dt / (2.0 * math.pi)
        return math.exp(-omega ** 2 / omega0 ** 2) * math.cos(omega * centre) * math.sin(omega * pixel_dt / 2.0) \
            / (math.pi * omega)

    @staticmethod
    def _check(tm, n_rows, n_controls, what):
        if n_rows != tm.n_pixels:
            raise ShapeError(f'{what} has {n_rows} rows, transfer matrix expects {tm.n_pixels}')
        if tm.per_control and n_controls != tm.entries.shape[0]:
            raise ShapeError(f'{what} has {n_controls} controls, transfer matrix has {tm.entries.shape[0]}')

    @staticmethod
    def apply_filter(tm, controls):
        values = controls.values if isinstance(controls, ControlGrid) else np.asarray(controls, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        FilterService._check(tm, values.shape[0], values.shape[1], 'control grid')
        if tm.per_control:
            filtered = np.einsum('kmn,nk->mk', tm.entries, values)
        else:
            filtered = tm.entries @ values
        return SubpixelGrid(subpixel_dt=tm.subpixel_dt, values=filtered)

    @staticmethod
    def backprop_gradient(tm, subpixel_grad, controls=None):
        """∂Φ/∂uₖ(j) = Σₙ Tₖₙⱼ ∂Φ/∂sₖ(n); pinned pixels of `controls` get zero."""
        grad = np.asarray(subpixel_grad, dtype=np.float64)
        if grad.ndim == 1:
            grad = grad[:, None]
        if grad.shape[0] != tm.n_subpixels:
            raise ShapeError(f'subpixel gradient has {grad.shape[0]} rows, transfer matrix expects '
                             f'{tm.n_subpixels}')
        if tm.per_control:
            pixel = np.einsum('kmn,mk->nk', tm.entries, grad)
        else:
            pixel = tm.entries.T @ grad
        if controls is not None:
            pixel[~controls.free_mask()] = 0.0
        return pixel

    @staticmethod
    def pin_boundaries(controls, first_values=None, last_values=None):
        """Pin the first/last pixel of every control to the given values (None leaves a side free)."""
        values = controls.values.copy()
        pinned = []
        for k in range(controls.n_controls):
            first = first_values is not None and first_values[k] is not None
            last = last_values is not None and last_values[k] is not None
            if first:
                values[0, k] = first_values[k]
            if last:
                values[-1, k] = last_values[k]
            pinned.append((first, last))
        return ControlGrid(pixel_dt=controls.pixel_dt, values=values, pinned=tuple(pinned))

    @staticmethod
    def fit_polynomial(controls, degree=8):
        """Least-squares polynomial fit of each control over pixel centres; pinned pixels keep their values."""
        t = (np.arange(controls.n_pixels) + 0.5) * controls.pixel_dt
        mask = controls.free_mask()
        fitted = controls.values.copy()
        for k in range(controls.n_controls):
            free = mask[:, k]
            if free.sum() < 2:
                continue
            # pinned pixels are boundary conditions, not samples of the smooth pulse
            poly = np.polynomial.Polynomial.fit(t[free], controls.values[free, k], min(degree, int(free.sum()) - 1))
            fitted[free, k] = poly(t[free])
        return ControlGrid(pixel_dt=controls.pixel_dt, values=fitted, pinned=controls.pinned)
