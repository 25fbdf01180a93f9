# controllers/sweep_controller.py
import click

from controllers.base import command_epilog, common_options, output_path, require_config, run_command
from models.manifest import Command
from services.sweep_service import SweepService
from utils.reports import sweep_to_dict, write_json, write_sweep_csv
from utils.scenario_file import load_scenario


@click.command('sweep', epilog=command_epilog())
@common_options
def sweep_cmd(config_path, out_dir, seed, jobs, quick):
    """Speed-limit sweep over p_norm_list x horizon_list with a power-law fit."""

    def action(manifest):
        scenario_cfg = load_scenario(require_config(config_path))
        if quick:
            scenario_cfg = scenario_cfg.quick()
        if not scenario_cfg.p_norm_list:
            raise KeyError('p_norm_list')
        if not scenario_cfg.horizon_list:
            raise KeyError('horizon_list')
        template = scenario_cfg.to_scenario(p_norm=scenario_cfg.p_norm_list[0],
                                            horizon=scenario_cfg.horizon_list[0],
                                            **({'seed': seed} if seed is not None else {}))
        manifest.seed = template.seed
        result = SweepService.speed_limit_sweep(
            template.model, list(scenario_cfg.p_norm_list), list(scenario_cfg.horizon_list), jobs=jobs,
            optimizer_cfg=scenario_cfg.optimizer_config(template.seed), cfg=scenario_cfg.integrator_config(),
            quadratures=template.quadratures, seed=template.seed, pixel_dt=template.pixel_dt,
            subpixel_dt=template.subpixel_dt, bandwidth=template.bandwidth,
            measurement_kappa_times=template.measurement_kappa_times, eps_one_photon=template.eps_one_photon,
            calibration_method=template.calibration_method)
        write_sweep_csv(output_path(manifest, 'sweep.csv'), result)
        write_json(output_path(manifest, 'sweep.json'), sweep_to_dict(result))
        click.echo(f'speed limits (ns): {result.speed_limits}; alpha = {result.alpha:.3f} ± {result.alpha_stderr:.3f}')
        return 0

    run_command(Command.SWEEP, config_path, out_dir, seed, action)
