import enum
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone

from config import Config


class Command(enum.Enum):
    CALIBRATE = 'calibrate'
    SIMULATE = 'simulate'
    OPTIMIZE = 'optimize'
    SWEEP = 'sweep'
    BENCHMARK = 'benchmark'


@dataclass
class RunManifest:
    command: Command
    config_path: str
    output_dir: str
    seed: int
    versions: dict = field(default_factory=lambda: {
        'library': Config.VERSION,
        'config_schema': Config.CONFIG_SCHEMA_VERSION,
    })
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished_at: str | None = None
    exit_code: int | None = None
    outputs: list = field(default_factory=list)

    def finish(self, exit_code):
        self.exit_code = exit_code
        self.finished_at = datetime.now(timezone.utc).isoformat()

    def to_dict(self):
        data = asdict(self)
        data['command'] = self.command.value
        return data
