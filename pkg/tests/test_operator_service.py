import numpy as np
import pytest

from models.operator import DensityState, DissipationChannel, Operator
from services.liouville_service import LiouvilleService
from services.operator_service import OperatorService
from utils.errors import DimensionError, ShapeError


def test_ladder_operators():
    a = OperatorService.annihilation(5).entries
    n = OperatorService.number(5).entries
    assert np.allclose(a.conj().T @ a, n)
    comm = a @ a.conj().T - a.conj().T @ a
    # [a, a†] = I except on the truncated top level
    assert np.allclose(np.diag(comm)[:-1], 1.0)
    assert np.isclose(np.diag(comm)[-1], -4.0)


def test_hermitian_tag_is_checked_relative_to_scale():
    small = 1e-6 * np.array([[1.0, 2.0], [2.0, -1.0]])
    assert Operator(small, hermitian=True).dim == 2
    skewed = small.astype(complex)
    skewed[0, 1] += 1e-15
    with pytest.raises(ShapeError):
        Operator(skewed, hermitian=True)
    assert Operator(np.zeros((3, 3)), hermitian=True).dim == 3


def test_annihilation_needs_two_levels():
    with pytest.raises(DimensionError):
        OperatorService.annihilation(1)


def test_generator_preserves_trace_and_hermiticity(rng, make_hermitian, make_density, make_channels):
    rho = make_density(rng, 5)
    H = make_hermitian(rng, 5)
    channels = make_channels(rng, 5)
    out = OperatorService.lindblad_rhs(rho, H, channels)
    assert abs(np.trace(out)) < 1e-12
    assert OperatorService.hermiticity_error(out) < 1e-12


def test_adjoint_is_hilbert_schmidt_adjoint(rng, make_hermitian, make_density, make_channels):
    rho = make_density(rng, 4).entries
    lam = make_hermitian(rng, 4).entries
    H = make_hermitian(rng, 4)
    channels = make_channels(rng, 4, count=3)
    lhs = OperatorService.hs_inner(lam, OperatorService.lindblad_rhs(rho, H, channels))
    rhs = OperatorService.hs_inner(OperatorService.lindblad_adjoint_rhs(lam, H, channels), rho)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_adjoint_is_unital(rng, make_hermitian, make_channels):
    H = make_hermitian(rng, 4)
    out = OperatorService.lindblad_adjoint_rhs(np.eye(4), H, make_channels(rng, 4))
    assert np.max(np.abs(out)) < 1e-12


def test_generator_matches_superoperator(rng, make_hermitian, make_density, make_channels):
    rho = make_density(rng, 3)
    H = make_hermitian(rng, 3)
    channels = make_channels(rng, 3)
    sup = LiouvilleService.build_superoperator(H, channels)
    assert np.allclose(LiouvilleService.apply(sup, rho), OperatorService.lindblad_rhs(rho, H, channels),
                       atol=1e-12)


def test_zero_rate_channel_contributes_nothing(rng, make_hermitian, make_density):
    rho = make_density(rng, 3)
    H = make_hermitian(rng, 3)
    idle = (DissipationChannel(0.0, OperatorService.annihilation(3)),)
    assert np.allclose(OperatorService.lindblad_rhs(rho, H, idle), OperatorService.lindblad_rhs(rho, H, ()))


def test_dimension_mismatch_raises(rng, make_hermitian, make_density):
    with pytest.raises(ShapeError):
        OperatorService.lindblad_rhs(make_density(rng, 3), make_hermitian(rng, 4), ())


def test_trace_distance():
    zero = DensityState.fock(3, 0)
    one = DensityState.fock(3, 1)
    assert OperatorService.trace_distance(zero, zero) == pytest.approx(0.0, abs=1e-15)
    assert OperatorService.trace_distance(zero, one) == pytest.approx(1.0)


def test_truncation_leak_reads_top_levels():
    assert OperatorService.truncation_leak(DensityState.fock(6, 5)) == pytest.approx(1.0)
    assert OperatorService.truncation_leak(DensityState.fock(6, 0)) == 0.0
    stack = np.array([DensityState.fock(6, 0).entries, DensityState.fock(6, 4).entries])
    assert OperatorService.truncation_leak(stack) == pytest.approx(1.0)


def test_coherent_state_mean_photon():
    rho = OperatorService.coherent_state(30, 1.2)
    n = OperatorService.expectation(OperatorService.number(30), rho)
    assert n.real == pytest.approx(1.44, rel=1e-8)


def test_state_validation():
    with pytest.raises(ShapeError):
        DensityState(np.array([[1.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ShapeError):
        DensityState(np.eye(2))
    assert DensityState(np.eye(2), normalized=False).dim == 2
    with pytest.raises(ShapeError):
        Operator(np.array([[0.0, 1.0], [0.0, 0.0]]), hermitian=True)
    with pytest.raises(ShapeError):
        DissipationChannel(-1.0, OperatorService.annihilation(2))
