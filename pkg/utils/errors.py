"""Exception types shared by the services and the command modules.

Every error carries the process exit code the CLI maps it to.
"""


class OpenGrapeError(Exception):
    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class ConfigError(OpenGrapeError):
    exit_code = 1


class DimensionError(OpenGrapeError):
    exit_code = 1


class ShapeError(OpenGrapeError):
    exit_code = 1


class GridMismatchError(OpenGrapeError):
    exit_code = 1


class CalibrationError(OpenGrapeError):
    exit_code = 2

    def __init__(self, message, scan_trace=None):
        super().__init__(message, scan_trace=scan_trace or [])
        self.scan_trace = scan_trace or []


class OptimizationStalled(OpenGrapeError):
    exit_code = 3


class IntegrationError(OpenGrapeError):
    exit_code = 4

    def __init__(self, message, subpixel=None, state_index=None):
        super().__init__(message, subpixel=subpixel, state_index=state_index)
        self.subpixel = subpixel
        self.state_index = state_index

    def with_state(self, state_index):
        err = type(self)(f'{self} (initial state {state_index})', subpixel=self.subpixel,
                         state_index=state_index)
        return err


class DivergenceError(IntegrationError):
    pass


class TruncationError(OpenGrapeError):
    exit_code = 4

    def __init__(self, message, leak):
        super().__init__(message, leak=leak)
        self.leak = leak


class ExpmOverflowError(OpenGrapeError):
    exit_code = 4

    def __init__(self, message, norm):
        super().__init__(message, norm=norm)
        self.norm = norm


class OptimizationAborted(OpenGrapeError):
    exit_code = 4
