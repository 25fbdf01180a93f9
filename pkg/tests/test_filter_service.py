import math

import numpy as np
import pytest
from scipy import integrate, special

from models.controls import ControlGrid
from services.filter_service import BANDWIDTH_RATIO, FilterService
from utils.errors import GridMismatchError, ShapeError


def test_bandwidth_ratio_constant():
    assert BANDWIDTH_RATIO == pytest.approx(0.58870501, abs=1e-8)
    omega_b = 2 * math.pi * 0.1
    omega0 = float(FilterService.reference_bandwidth(omega_b))
    # the 3 dB point of exp(−ω²/ω₀²)
    assert math.exp(-(omega_b / omega0) ** 2) == pytest.approx(1 / math.sqrt(2), rel=1e-12)


def test_shape_and_grid_mismatch():
    tm = FilterService.build_gaussian_transfer(6, 1.0, 0.2, 1.0)
    assert tm.entries.shape == (30, 6)
    assert tm.n_subpixels == 30 and tm.n_pixels == 6
    with pytest.raises(GridMismatchError):
        FilterService.build_gaussian_transfer(6, 1.0, 0.3, 1.0)
    with pytest.raises(ShapeError):
        FilterService.build_gaussian_transfer(6, 1.0, 0.2, -1.0)


def test_dc_gain_is_one_away_from_the_edges():
    tm = FilterService.build_gaussian_transfer(20, 1.0, 0.1, 2 * math.pi * 0.1)
    row_sums = tm.entries.sum(axis=1)
    interior = slice(90, 110)
    assert np.max(np.abs(row_sums[interior] - 1.0)) < 1e-10
    # the pulse is zero outside [0, T]: the edges only see half the drive
    assert row_sums[0] == pytest.approx(0.5, abs=0.05)


def test_large_bandwidth_partitions_subpixels():
    tm = FilterService.build_gaussian_transfer(5, 1.0, 0.25, 1e5)
    expected = np.kron(np.eye(5), np.ones((4, 1)))
    assert np.allclose(tm.entries, expected, atol=1e-12)


def test_left_edge_sampling_matches_closed_form():
    omega_b = 2.0
    tm = FilterService.build_gaussian_transfer(4, 1.0, 0.5, omega_b, sample_offset=0.0)
    omega0 = omega_b / BANDWIDTH_RATIO
    n, j = 3, 2
    t = (n - 1) * 0.5
    expected = 0.5 * (special.erf(omega0 * (t - (j - 1)) / 2) - special.erf(omega0 * (t - j) / 2))
    assert tm.entries[n - 1, j - 1] == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize('n, j', [(1, 1), (4, 2), (7, 3), (12, 1)])
def test_entries_match_fourier_quadrature(n, j):
    pixel_dt, subpixel_dt, omega_b = 1.0, 0.25, 3.0
    tm = FilterService.build_gaussian_transfer(3, pixel_dt, subpixel_dt, omega_b)
    omega0 = float(tm.reference_bandwidth[0])
    t = (n - 1 + 0.5) * subpixel_dt
    value, _ = integrate.quad(FilterService.transfer_integrand, 0.0, 12.0 * omega0,
                              args=(t, j, pixel_dt, omega0), limit=400, epsabs=1e-13, epsrel=1e-12)
    # the integrand is even in ω
    assert 2.0 * value == pytest.approx(tm.entries[n - 1, j - 1], abs=1e-9)


def test_filter_is_linear(rng):
    tm = FilterService.build_gaussian_transfer(8, 1.0, 0.1, 2.0)
    u = rng.normal(size=(8, 2))
    v = rng.normal(size=(8, 2))
    lhs = FilterService.apply_filter(tm, 2.0 * u - 0.5 * v).values
    rhs = 2.0 * FilterService.apply_filter(tm, u).values - 0.5 * FilterService.apply_filter(tm, v).values
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_backprop_is_the_transpose(rng):
    tm = FilterService.build_gaussian_transfer(8, 1.0, 0.1, 2.0)
    u = rng.normal(size=(8, 2))
    g = rng.normal(size=(80, 2))
    forward = np.sum(g * FilterService.apply_filter(tm, u).values)
    backward = np.sum(FilterService.backprop_gradient(tm, g) * u)
    assert forward == pytest.approx(backward, rel=1e-12)


def test_per_control_bandwidths(rng):
    stacked = FilterService.build_gaussian_transfer(6, 1.0, 0.5, [1.0, 4.0])
    assert stacked.per_control and stacked.entries.shape == (2, 12, 6)
    u = rng.normal(size=(6, 2))
    out = FilterService.apply_filter(stacked, u).values
    for k, bw in enumerate((1.0, 4.0)):
        single = FilterService.build_gaussian_transfer(6, 1.0, 0.5, bw)
        assert np.allclose(out[:, k], single.entries @ u[:, k], atol=1e-14)
    g = rng.normal(size=(12, 2))
    back = FilterService.backprop_gradient(stacked, g)
    assert np.allclose(back[:, 1], stacked.matrix(1).T @ g[:, 1])


def test_control_shape_mismatch_raises():
    tm = FilterService.build_gaussian_transfer(6, 1.0, 0.5, 1.0)
    with pytest.raises(ShapeError):
        FilterService.apply_filter(tm, np.zeros((5, 1)))
    with pytest.raises(ShapeError):
        FilterService.backprop_gradient(tm, np.zeros((11, 1)))


def test_pinning_is_exact(rng):
    grid = ControlGrid(pixel_dt=1.0, values=rng.normal(size=(6, 2)))
    pinned = FilterService.pin_boundaries(grid, [0.3, 0.0], [0.0, 0.0])
    assert pinned.values[0, 0] == 0.3 and pinned.values[0, 1] == 0.0
    assert np.all(pinned.values[-1] == 0.0)
    assert pinned.free_mask().sum() == 8
    moved = pinned.with_free_vector(pinned.free_vector() + 1.0)
    assert moved.values[0, 0] == 0.3 and np.all(moved.values[-1] == 0.0)
    tm = FilterService.build_gaussian_transfer(6, 1.0, 0.5, 1.0)
    grad = FilterService.backprop_gradient(tm, rng.normal(size=(12, 2)), pinned)
    assert np.all(grad[0] == 0.0) and np.all(grad[-1] == 0.0)
    assert np.all(grad[1:-1] != 0.0)


def test_one_sided_pinning():
    grid = ControlGrid(pixel_dt=1.0, values=np.ones((4, 1)))
    pinned = FilterService.pin_boundaries(grid, None, [0.0])
    assert pinned.pinned == ((False, True),)
    assert pinned.values[0, 0] == 1.0 and pinned.values[-1, 0] == 0.0


def test_polynomial_fit_reproduces_low_degree_pulses():
    t = (np.arange(30) + 0.5) * 2.0
    values = np.column_stack([1e-3 * t ** 2 - 0.05 * t + 0.4, np.zeros(30)])
    grid = FilterService.pin_boundaries(ControlGrid(pixel_dt=2.0, values=values), [0.25, 0.0], [0.0, 0.0])
    fitted = FilterService.fit_polynomial(grid, degree=8)
    assert np.allclose(fitted.values[1:-1, 0], values[1:-1, 0], atol=1e-3)
    assert fitted.values[0, 0] == 0.25 and fitted.values[-1, 0] == 0.0
