import math

import pytest

from models.problem import OptimizerKind
from models.propagation import IntegrationMethod
from models.reset import CalibrationMethod, Quadratures, ResetMode
from services.operator_service import OperatorService
from services.reset_service import ResetService
from utils.errors import ConfigError
from utils.scenario_file import ScenarioConfig, dump_scenario, from_mapping, load_scenario, to_mapping

BASE = {'chi_mhz': '1.3', 'kerr_khz': '-2.1', 'kappa_mhz': '1.1'}


def test_required_keys():
    for key in BASE:
        raw = dict(BASE)
        del raw[key]
        with pytest.raises(KeyError) as info:
            from_mapping(raw)
        assert info.value.args[0] == key


def test_defaults_and_units():
    config = from_mapping({**BASE, 'p_norm': '2', 'horizon_ns': '200', 'beta_over_T': '0.4'})
    assert config.fock_dim == 40 and config.mode == 'grape'
    scenario = config.to_scenario()
    assert scenario.model.chi == pytest.approx(2 * math.pi * 1.3e-3)
    assert scenario.model.kerr == pytest.approx(-2 * math.pi * 2.1e-6)
    assert scenario.model.kappa == pytest.approx(2 * math.pi * 1.1e-3)
    assert scenario.bandwidth == pytest.approx(2 * math.pi * 0.1)
    assert scenario.penalty_beta == pytest.approx(0.4 / 200.0)
    assert scenario.quadratures is Quadratures.XY
    assert scenario.calibration_method is CalibrationMethod.ANALYTIC
    assert scenario.eps_one_photon is None
    assert scenario.n_pixels == 200


def test_scenario_needs_power_and_horizon():
    config = from_mapping(BASE)
    with pytest.raises(KeyError) as info:
        config.to_scenario()
    assert info.value.args[0] == 'p_norm'
    with pytest.raises(KeyError) as info:
        config.to_scenario(p_norm=1.0)
    assert info.value.args[0] == 'horizon_ns'
    assert config.to_scenario(p_norm=1.0, horizon=50.0, seed=9).seed == 9


@pytest.mark.parametrize('key, value', [
    ('fock_dim', 'many'),
    ('mode', 'fastest'),
    ('quadratures', 'z'),
    ('calibration', 'guess'),
    ('method', 'newton'),
    ('integrator', 'euler'),
    ('streaming', 'maybe'),
    ('kappa_mhz', '-1'),
    ('ground_sign', '2'),
])
def test_invalid_values(key, value):
    with pytest.raises(ConfigError):
        from_mapping({**BASE, key: value})


def test_lists_and_flags():
    config = from_mapping({**BASE, 'dims': '4, 8,16', 'p_norm_list': '0.5;1;2', 'streaming': 'yes',
                           'method': 'LBFGS', 'integrator': 'rk4', 'mode': 'grape_penalized'})
    assert config.dims == (4, 8, 16)
    assert config.p_norm_list == (0.5, 1.0, 2.0)
    assert config.integrator_config().streaming is True
    assert config.integrator_config().method is IntegrationMethod.RK4
    assert config.optimizer_config().kind is OptimizerKind.LBFGS
    assert config.reset_mode() is ResetMode.GRAPE_PENALIZED


def test_round_trip(tmp_path):
    config = from_mapping({**BASE, 'p_norm': '0.1', 'horizon_ns': '123.4', 'detuning_mhz': '0.3',
                           'horizon_list': '100,150', 'eps_one_photon_mhz': '1.41156', 'seed': '11'})
    path = tmp_path / 'scenario.env'
    dump_scenario(config, path)
    again = load_scenario(path)
    assert again == config
    second = tmp_path / 'again.env'
    dump_scenario(again, second)
    assert path.read_text() == second.read_text()
    assert to_mapping(config)['horizon_list'] == '100.0,150.0'


def test_quick_variant_shrinks_the_run():
    config = ScenarioConfig(chi_mhz=1.3, kerr_khz=-2.1, kappa_mhz=1.1, fock_dim=40, max_iters=500)
    quick = config.quick()
    assert quick.fock_dim == 30 and quick.subpixel_dt_ns == 0.5 and quick.max_iters == 50
    assert config.fock_dim == 40


def test_empty_file_is_rejected(tmp_path):
    path = tmp_path / 'empty.env'
    path.write_text('')
    with pytest.raises(ConfigError):
        load_scenario(path)


def test_quick_variant_holds_a_strong_measurement():
    config = from_mapping({**BASE, 'p_norm': '4', 'horizon_ns': '50', 'eps_one_photon_mhz': '1.41156'}).quick()
    states, _ = ResetService.prepare_measurement_state(config.to_scenario())
    for state in states.values():
        assert OperatorService.truncation_leak(state) < 1e-9
