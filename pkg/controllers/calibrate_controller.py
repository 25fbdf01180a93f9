# controllers/calibrate_controller.py
import logging

import click

from controllers.base import command_epilog, common_options, output_path, require_config, run_command
from models.manifest import Command
from models.reset import CalibrationMethod
from services.calibration_service import CalibrationService
from utils.reports import calibration_to_dict, write_json
from utils.scenario_file import load_scenario

logger = logging.getLogger(__name__)

# published one-photon amplitude (f/2π, MHz) for χ = 1.3 MHz, K = −2.1 kHz, κ = 1.1 MHz
REFERENCE_EPS_ONE_PHOTON_MHZ = 1.595


@click.command('calibrate', epilog=command_epilog())
@common_options
def calibrate_cmd(config_path, out_dir, seed, jobs, quick):
    """Find the drive amplitude whose steady state holds one photon (analytic and numeric)."""

    def action(manifest):
        scenario_cfg = load_scenario(require_config(config_path))
        if quick:
            scenario_cfg = scenario_cfg.quick()
        model = scenario_cfg.model()
        analytic = CalibrationService.calibrate_one_photon(model, CalibrationMethod.ANALYTIC)
        numeric = CalibrationService.calibrate_one_photon(model, CalibrationMethod.NUMERIC,
                                                          cfg=scenario_cfg.integrator_config())
        agreement = abs(numeric.eps_one_photon / analytic.eps_one_photon - 1.0)
        payload = {
            'analytic': calibration_to_dict(analytic, REFERENCE_EPS_ONE_PHOTON_MHZ),
            'numeric': calibration_to_dict(numeric, REFERENCE_EPS_ONE_PHOTON_MHZ),
            'relative_agreement': agreement,
            'fock_dim': model.fock_dim,
        }
        write_json(output_path(manifest, 'calibration.json'), payload)
        click.echo(f"one-photon amplitude: analytic {payload['analytic']['eps_one_photon_mhz']:.6f} MHz, "
                   f"numeric {payload['numeric']['eps_one_photon_mhz']:.6f} MHz (agreement {agreement:.2e})")
        return 0

    run_command(Command.CALIBRATE, config_path, out_dir, seed, action)
