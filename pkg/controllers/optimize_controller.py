# controllers/optimize_controller.py
import logging

import click
import numpy as np

from controllers.base import command_epilog, common_options, output_path, require_config, run_command
from models.manifest import Command
from models.reset import ResetMode
from services.reset_service import ResetService
from utils.errors import OptimizationStalled
from utils.reports import report_to_dict, write_history_csv, write_json, write_photon_csv, write_pulse_csv
from utils.scenario_file import load_scenario

logger = logging.getLogger(__name__)


@click.command('optimize', epilog=command_epilog())
@common_options
def optimize_cmd(config_path, out_dir, seed, jobs, quick):
    """Run one reset scenario (mode passive | clear | grape | grape_penalized)."""

    def action(manifest):
        scenario_cfg = load_scenario(require_config(config_path))
        if quick:
            scenario_cfg = scenario_cfg.quick()
        scenario = scenario_cfg.to_scenario(**({'seed': seed} if seed is not None else {}))
        manifest.seed = scenario.seed
        mode = scenario_cfg.reset_mode()
        report = ResetService.run_reset(scenario, mode, optimizer_cfg=scenario_cfg.optimizer_config(scenario.seed),
                                        cfg=scenario_cfg.integrator_config(), workers=jobs,
                                        poly_degree=scenario_cfg.poly_degree)
        write_photon_csv(output_path(manifest, 'photon_vs_time.csv'), report)
        pixel_times = np.arange(report.pixel_controls.shape[0]) * report.pixel_dt
        if mode is not ResetMode.PASSIVE:
            sub_times = np.arange(report.subpixel_controls.shape[0]) * report.subpixel_dt
            write_pulse_csv(output_path(manifest, 'pulse.csv'), pixel_times, report.pixel_controls, 'u')
            write_pulse_csv(output_path(manifest, 'pulse_subpixel.csv'), sub_times, report.subpixel_controls, 's')
        if report.fitted_branches:
            write_photon_csv(output_path(manifest, 'photon_vs_time_fitted.csv'), report, fitted=True)
            write_pulse_csv(output_path(manifest, 'pulse_fitted.csv'), pixel_times, report.fitted_pixel_controls,
                            'u')
        if report.history:
            write_history_csv(output_path(manifest, 'history.csv'), report.history)
        write_json(output_path(manifest, 'report.json'), report_to_dict(report))
        click.echo(f'final photon numbers: {report.final_photons}; max: {report.max_photons}')
        if report.stalled:
            logger.warning('optimizer stalled; outputs hold the best controls found')
            return OptimizationStalled.exit_code
        return 0

    run_command(Command.OPTIMIZE, config_path, out_dir, seed, action)
