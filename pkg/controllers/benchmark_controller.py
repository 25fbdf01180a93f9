# controllers/benchmark_controller.py
import click
from dotenv import dotenv_values

from controllers.base import command_epilog, common_options, output_path, run_command
from models.manifest import Command
from services.liouville_service import LiouvilleService
from utils.errors import ConfigError
from utils.helpers import mhz_to_rad_ns, parse_int_list
from utils.reports import benchmark_to_dict, write_benchmark_csv, write_json

DEFAULT_DIMS = (8, 12, 16, 24, 32, 48)
QUICK_DIMS = (4, 8)


def benchmark_options(raw, quick=False):
    """Benchmark settings from a scenario mapping; every key is optional."""
    try:
        dims = tuple(parse_int_list(raw['dims'])) if raw.get('dims') else (QUICK_DIMS if quick else DEFAULT_DIMS)
        return {
            'dims': dims,
            'n_pixels': int(raw.get('n_pixels') or (20 if quick else 100)),
            'repetitions': int(raw.get('repetitions') or (1 if quick else 3)),
            'kappa': mhz_to_rad_ns(float(raw.get('kappa_mhz') or 1.1)),
            'detuning': mhz_to_rad_ns(float(raw.get('detuning_mhz') or 1.3)),
            'seed': int(raw.get('seed') or 0),
        }
    except ValueError as err:
        raise ConfigError(f'invalid benchmark setting: {err}') from err


@click.command('benchmark', epilog=command_epilog())
@common_options
def benchmark_cmd(config_path, out_dir, seed, jobs, quick):
    """Time matrix-exponential propagation against Runge-Kutta propagation versus d."""

    def action(manifest):
        raw = dotenv_values(config_path) if config_path else {}
        options = benchmark_options(raw, quick)
        if seed is not None:
            options['seed'] = seed
        manifest.seed = options['seed']
        result = LiouvilleService.benchmark_scaling(**options)
        write_benchmark_csv(output_path(manifest, 'benchmark.csv'), result)
        write_json(output_path(manifest, 'benchmark.json'), benchmark_to_dict(result))
        for row in result.rows:
            click.echo(f'd={row.dim:3d}  expm {row.t_expm_ms:9.2f} ms  rk {row.t_rk_ms:9.2f} ms  '
                       f'n_rk={row.n_rk}  trace_dist={row.trace_dist:.1e}')
        return 0

    run_command(Command.BENCHMARK, config_path, out_dir, seed, action)
