import numpy as np
import pytest

from models.operator import DissipationChannel, Operator
from models.propagation import PiecewiseGenerator
from services.liouville_service import LiouvilleService
from services.operator_service import OperatorService
from services.propagation_service import PropagationService
from utils.errors import ExpmOverflowError, ShapeError


def test_vec_of_a_product():
    a = np.arange(9.0).reshape(3, 3)
    x = np.arange(9.0, 18.0).reshape(3, 3) + 1j
    b = np.eye(3) + np.diag([1.0, 2.0], 1)
    lhs = LiouvilleService.vec(a @ x @ b)
    rhs = np.kron(b.T, a) @ LiouvilleService.vec(x)
    assert np.allclose(lhs, rhs)
    assert np.array_equal(LiouvilleService.unvec(LiouvilleService.vec(x), 3), x)


def test_two_level_decay_spectrum():
    kappa = 0.8
    sup = LiouvilleService.build_superoperator(np.zeros((2, 2)),
                                               (DissipationChannel(kappa, OperatorService.annihilation(2)),))
    eigenvalues = np.sort_complex(np.linalg.eigvals(sup.entries))
    assert np.allclose(eigenvalues, np.sort_complex(np.array([-kappa, -kappa / 2, -kappa / 2, 0.0])), atol=1e-12)


def test_apply_matches_generator(rng, make_hermitian, make_density, make_channels):
    H = make_hermitian(rng, 4)
    channels = make_channels(rng, 4)
    rho = make_density(rng, 4)
    sup = LiouvilleService.build_superoperator(H, channels)
    assert np.allclose(LiouvilleService.apply(sup, rho), OperatorService.lindblad_rhs(rho, H, channels),
                       atol=1e-12)


def test_superoperator_adjoint_matches_adjoint_generator(rng, make_hermitian, make_channels):
    H = make_hermitian(rng, 3)
    channels = make_channels(rng, 3)
    lam = make_hermitian(rng, 3).entries
    sup = LiouvilleService.build_superoperator(H, channels)
    assert np.allclose(LiouvilleService.apply(sup.adjoint, lam),
                       OperatorService.lindblad_adjoint_rhs(lam, H, channels), atol=1e-12)


def test_expm_at_zero_time_is_identity(rng, make_hermitian, make_channels):
    sup = LiouvilleService.build_superoperator(make_hermitian(rng, 3), make_channels(rng, 3))
    prop = LiouvilleService.expm_propagator(sup, 0.0)
    assert np.array_equal(prop.entries, np.eye(9))
    with pytest.raises(ShapeError):
        LiouvilleService.expm_propagator(sup, -0.1)


def test_expm_preserves_trace(rng, make_hermitian, make_channels, make_density):
    sup = LiouvilleService.build_superoperator(make_hermitian(rng, 4), make_channels(rng, 4))
    prop = LiouvilleService.expm_propagator(sup, 1.7)
    rho = make_density(rng, 4)
    out = LiouvilleService.unvec(prop.entries @ LiouvilleService.vec(rho.entries), 4)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
    assert OperatorService.hermiticity_error(out) < 1e-12


def test_expm_overflow_is_reported():
    sup = LiouvilleService.build_superoperator(
        np.zeros((3, 3)), (DissipationChannel(1e4, OperatorService.annihilation(3)),))
    with pytest.raises(ExpmOverflowError) as info:
        LiouvilleService.expm_propagator(sup, 1e3)
    assert info.value.exit_code == 4


@pytest.mark.parametrize('dim', [2, 3, 5])
def test_rk_agrees_with_expm(dim, rng, make_hermitian, make_channels, make_density, tight_integrator):
    gen = PiecewiseGenerator(
        drift=make_hermitian(rng, dim),
        control_ops=(make_hermitian(rng, dim),),
        channels=make_channels(rng, dim),
        amplitudes=rng.normal(size=(12, 1)),
        subpixel_dt=0.3,
    )
    rho = make_density(rng, dim)
    reference = LiouvilleService.propagate_piecewise(rho, gen)
    traj = PropagationService.propagate_forward(rho, gen, tight_integrator)
    assert reference.shape == traj.states.shape
    assert OperatorService.trace_distance(traj.states[-1], reference[-1]) < 1e-8


def test_driven_cavity_generator_shape():
    gen = LiouvilleService.driven_cavity_generator(5, 7, 1.0, 0.1, 0.2, np.ones(7))
    assert gen.dim == 5 and gen.n_subpixels == 7
    assert np.allclose(gen.drift.entries, 0.2 * np.diag(np.arange(5)))


def test_small_benchmark_runs(monkeypatch):
    monkeypatch.setenv('OMP_NUM_THREADS', '1')
    result = LiouvilleService.benchmark_scaling((4, 3), n_pixels=5, repetitions=1)
    assert [row.dim for row in result.rows] == [3, 4]
    for row in result.rows:
        assert row.t_expm_ms > 0 and row.t_rk_ms > 0
        assert row.n_rk >= 2 * 5
        assert row.trace_dist < 1e-6
    assert np.isfinite(result.expm_slope) and np.isfinite(result.rk_slope)


def test_slope_needs_two_points():
    slope, err = LiouvilleService._slope([8], [1.0])
    assert np.isnan(slope) and np.isnan(err)
    slope, _ = LiouvilleService._slope([2, 4, 8], [1.0, 8.0, 64.0])
    assert slope == pytest.approx(3.0)


def test_superoperator_rejects_mismatched_channels():
    with pytest.raises(ShapeError):
        LiouvilleService.build_superoperator(Operator(np.zeros((3, 3))),
                                             (DissipationChannel(1.0, OperatorService.annihilation(4)),))


def test_rk_matches_expm_on_fifty_random_problems(make_hermitian, make_channels, make_density, tight_integrator):
    rng = np.random.default_rng(1)
    for trial in range(50):
        dim = 2 + trial % 7
        gen = PiecewiseGenerator(
            drift=make_hermitian(rng, dim),
            control_ops=(make_hermitian(rng, dim), make_hermitian(rng, dim)),
            channels=make_channels(rng, dim),
            amplitudes=rng.normal(size=(10, 2)),
            subpixel_dt=0.2,
        )
        rho = make_density(rng, dim)
        reference = LiouvilleService.propagate_piecewise(rho, gen)
        states = PropagationService.propagate_forward(rho, gen, tight_integrator).states
        worst = max(OperatorService.trace_distance(a, b) for a, b in zip(states, reference))
        assert worst < 1e-8, f'trial {trial} (d={dim}): {worst:.2e}'
