import logging

import click
from dotenv import load_dotenv

from config import Config
from utils.helpers import UNITS_TABLE

load_dotenv()


def create_app():
    @click.group(help=f'Open-system GRAPE for resonator reset.\n\n\b\n{UNITS_TABLE}')
    @click.version_option(Config.VERSION, prog_name=Config.APP_NAME)
    @click.option('--verbose', '-v', is_flag=True, help='Debug logging.')
    def app(verbose):
        logging.getLogger().setLevel(logging.DEBUG if verbose else Config.LOG_LEVEL)

    logging.basicConfig(level=Config.LOG_LEVEL, format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    # Register commands
    from controllers.calibrate_controller import calibrate_cmd
    from controllers.simulate_controller import simulate_cmd
    from controllers.optimize_controller import optimize_cmd
    from controllers.sweep_controller import sweep_cmd
    from controllers.benchmark_controller import benchmark_cmd

    app.add_command(calibrate_cmd)
    app.add_command(simulate_cmd)
    app.add_command(optimize_cmd)
    app.add_command(sweep_cmd)
    app.add_command(benchmark_cmd)

    return app


app = create_app()

if __name__ == '__main__':
    app()
