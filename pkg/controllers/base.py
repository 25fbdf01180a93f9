# controllers/base.py
"""Options and error handling shared by every command."""
import functools
import logging
import os

import click

from config import Config
from models.manifest import RunManifest
from utils.errors import OpenGrapeError
from utils.helpers import UNITS_TABLE
from utils.reports import write_manifest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1


def common_options(func):
    """--config --out --seed --jobs --quick."""
    options = [
        click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
                     help='Scenario file (KEY=value lines).'),
        click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None,
                     help='Output directory (default: $GRAPE_OUTPUT_DIR/<command>).'),
        click.option('--seed', type=int, default=None, help='Overrides the seed of the scenario file.'),
        click.option('--jobs', type=int, default=Config.JOBS, show_default=True,
                     help='Parallel workers (sweep points or qubit branches).'),
        click.option('--quick', is_flag=True, help='Scaled-down run for CI (fock_dim 30, 0.5 ns subpixels, 50 iterations).'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def command_epilog():
    return '\b\n' + UNITS_TABLE


def run_command(command, config_path, out_dir, seed, action):
    """Run `action(manifest)` and exit with the code it returns or the code of the error it raises."""
    out_dir = out_dir or os.path.join(Config.OUTPUT_DIR, command.value)
    os.makedirs(out_dir, exist_ok=True)
    manifest = RunManifest(command=command, config_path=os.path.abspath(config_path) if config_path else '',
                           output_dir=os.path.abspath(out_dir), seed=seed if seed is not None else 0)
    logger.info('%s started (config %s, output %s)', command.value, config_path, out_dir)
    try:
        exit_code = action(manifest) or EXIT_OK
    except KeyError as err:
        key = err.args[0] if err.args else err
        click.echo(f'Missing field: {key}', err=True)
        exit_code = EXIT_CONFIG
    except FileNotFoundError as err:
        click.echo(f'Error: {err}', err=True)
        exit_code = EXIT_CONFIG
    except OpenGrapeError as err:
        click.echo(f'Error: {err}', err=True)
        exit_code = err.exit_code
    manifest.finish(exit_code)
    write_manifest(out_dir, manifest)
    logger.info('%s finished with exit code %d', command.value, exit_code)
    if exit_code:
        click.get_current_context().exit(exit_code)
    return exit_code


def require_config(config_path):
    if not config_path:
        raise KeyError('config')
    if not os.path.isfile(config_path):
        raise FileNotFoundError(f'scenario file not found: {config_path}')
    return config_path


def output_path(manifest, name):
    path = os.path.join(manifest.output_dir, name)
    manifest.outputs.append(name)
    return path
