"""Scenario files: KEY=value lines in lab units (MHz, kHz, ns).

`ScenarioConfig` keeps the values exactly as written so that
parse -> serialize -> parse is idempotent; conversion to rad/ns happens once,
in `to_scenario()`.
"""
from dataclasses import dataclass, field, fields, replace

from dotenv import dotenv_values

from config import Config
from models.problem import OptimizerConfig
from models.propagation import IntegratorConfig
from models.reset import CalibrationMethod, DispersiveModel, Quadratures, ResetMode, ResetScenario
from utils.errors import ConfigError, OpenGrapeError
from utils.helpers import khz_to_rad_ns, mhz_to_rad_ns, parse_float_list, parse_int_list

REQUIRED_KEYS = ('chi_mhz', 'kerr_khz', 'kappa_mhz')
_LIST_KEYS = {'dims': parse_int_list, 'p_norm_list': parse_float_list, 'horizon_list': parse_float_list}
_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


@dataclass(frozen=True)
class ScenarioConfig:
    chi_mhz: float
    kerr_khz: float
    kappa_mhz: float
    fock_dim: int = 40
    p_norm: float | None = None
    horizon_ns: float | None = None
    pixel_dt_ns: float = Config.PIXEL_DT_NS
    subpixel_dt_ns: float = Config.SUBPIXEL_DT_NS
    bandwidth_mhz: float = Config.BANDWIDTH_MHZ
    beta_over_T: float = 0.0
    quadratures: str = Quadratures.XY.value
    seed: int = 0
    mode: str = ResetMode.GRAPE.value
    detuning_mhz: float = 0.0
    n_crit: float = 29.0
    measurement_kappa_times: float = Config.MEASUREMENT_KAPPA_TIMES
    ground_sign: int = 1
    calibration: str = CalibrationMethod.ANALYTIC.value
    eps_one_photon_mhz: float | None = None
    method: str = 'bfgs'
    integrator: str = 'dopri45'
    max_iters: int = Config.MAX_ITERS
    lbfgs_memory: int = Config.LBFGS_MEMORY
    poly_degree: int = Config.POLY_DEGREE
    streaming: bool = False
    dims: tuple = field(default=())
    n_pixels: int = 100
    repetitions: int = 3
    p_norm_list: tuple = field(default=())
    horizon_list: tuple = field(default=())

    def model(self):
        return DispersiveModel(
            chi=mhz_to_rad_ns(self.chi_mhz),
            kerr=khz_to_rad_ns(self.kerr_khz),
            kappa=mhz_to_rad_ns(self.kappa_mhz),
            detuning=mhz_to_rad_ns(self.detuning_mhz),
            fock_dim=self.fock_dim,
            n_crit=self.n_crit,
            ground_sign=self.ground_sign,
        )

    def to_scenario(self, **overrides):
        """ResetScenario in rad/ns; a missing p_norm or horizon_ns raises KeyError."""
        p_norm = overrides.pop('p_norm', self.p_norm)
        horizon = overrides.pop('horizon', self.horizon_ns)
        if p_norm is None:
            raise KeyError('p_norm')
        if horizon is None:
            raise KeyError('horizon_ns')
        eps_one = None if self.eps_one_photon_mhz is None else mhz_to_rad_ns(self.eps_one_photon_mhz)
        return ResetScenario(
            model=self.model(),
            p_norm=p_norm,
            horizon=horizon,
            quadratures=Quadratures(self.quadratures),
            penalty_beta=self.beta_over_T / horizon,
            seed=overrides.pop('seed', self.seed),
            pixel_dt=self.pixel_dt_ns,
            subpixel_dt=self.subpixel_dt_ns,
            bandwidth=mhz_to_rad_ns(self.bandwidth_mhz),
            measurement_kappa_times=self.measurement_kappa_times,
            eps_one_photon=eps_one,
            calibration_method=CalibrationMethod(self.calibration),
            **overrides,
        )

    def reset_mode(self):
        return ResetMode(self.mode)

    def optimizer_config(self, seed=None):
        return OptimizerConfig(kind=self.method, max_iters=self.max_iters, memory=self.lbfgs_memory,
                               seed=self.seed if seed is None else seed)

    def integrator_config(self):
        return IntegratorConfig(method=self.integrator, streaming=self.streaming)

    def quick(self):
        """Scaled-down variant for CI runs."""
        return replace(self, fock_dim=min(self.fock_dim, Config.QUICK_FOCK_DIM),
                       subpixel_dt_ns=max(self.subpixel_dt_ns, Config.QUICK_SUBPIXEL_DT_NS),
                       max_iters=min(self.max_iters, Config.QUICK_MAX_ITERS))


def _parse_bool(key, text):
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ConfigError(f'invalid value for {key}: {text!r}')


def from_mapping(raw):
    """ScenarioConfig from string values; missing required keys raise KeyError."""
    values = {}
    for f in fields(ScenarioConfig):
        if f.name not in raw or raw[f.name] is None or raw[f.name] == '':
            if f.name in REQUIRED_KEYS:
                raise KeyError(f.name)
            continue
        text = str(raw[f.name]).strip()
        try:
            if f.name in _LIST_KEYS:
                values[f.name] = tuple(_LIST_KEYS[f.name](text))
            elif f.name == 'streaming':
                values[f.name] = _parse_bool(f.name, text)
            elif f.name in ('fock_dim', 'seed', 'ground_sign', 'max_iters', 'lbfgs_memory', 'poly_degree',
                            'n_pixels', 'repetitions'):
                values[f.name] = int(text)
            elif f.name in ('quadratures', 'mode', 'calibration', 'method', 'integrator'):
                values[f.name] = text.lower()
            else:
                values[f.name] = float(text)
        except ValueError as err:
            raise ConfigError(f'invalid value for {f.name}: {text!r}') from err
    config = ScenarioConfig(**values)
    _validate(config)
    return config


def _validate(config):
    try:
        Quadratures(config.quadratures)
        ResetMode(config.mode)
        CalibrationMethod(config.calibration)
        config.model()
        OptimizerConfig(kind=config.method)
        IntegratorConfig(method=config.integrator)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    except OpenGrapeError as err:
        raise ConfigError(str(err)) from err


def load_scenario(path):
    raw = dotenv_values(path)
    if not raw:
        raise ConfigError(f'scenario file {path} is empty or unreadable')
    return from_mapping(raw)


def _format(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ','.join(_format(v) for v in value)
    return str(value)


def to_mapping(config):
    return {f.name: _format(getattr(config, f.name)) for f in fields(config)
            if getattr(config, f.name) is not None and getattr(config, f.name) != ()}


def dump_scenario(config, path):
    with open(path, 'w', encoding='utf-8') as fh:
        for key, value in to_mapping(config).items():
            fh.write(f'{key}={value}\n')
