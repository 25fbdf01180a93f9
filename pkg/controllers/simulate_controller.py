# controllers/simulate_controller.py
import click

from controllers.base import command_epilog, common_options, output_path, require_config, run_command
from models.manifest import Command
from services.reset_service import ResetService
from utils.reports import read_pulse_csv, report_to_dict, write_json, write_photon_csv
from utils.scenario_file import load_scenario


@click.command('simulate', epilog=command_epilog())
@common_options
@click.option('--pulse', 'pulse_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Pixel pulse CSV (t_ns,u_1,...); omitted means passive decay.')
def simulate_cmd(config_path, out_dir, seed, jobs, quick, pulse_path):
    """Forward-simulate the reset window under a given pulse or none."""

    def action(manifest):
        scenario_cfg = load_scenario(require_config(config_path))
        if quick:
            scenario_cfg = scenario_cfg.quick()
        scenario = scenario_cfg.to_scenario(**({'seed': seed} if seed is not None else {}))
        manifest.seed = scenario.seed
        values = read_pulse_csv(pulse_path)[1] if pulse_path else None
        report = ResetService.simulate(scenario, values, cfg=scenario_cfg.integrator_config(), workers=jobs)
        write_photon_csv(output_path(manifest, 'photon_vs_time.csv'), report)
        write_json(output_path(manifest, 'report.json'), report_to_dict(report))
        click.echo(f'final photon numbers: {report.final_photons}')
        return 0

    run_command(Command.SIMULATE, config_path, out_dir, seed, action)
