"""Exception hierarchy shared by the library and the CLI exit-code contract."""


class SlowlightError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SlowlightError):
    """Invalid configuration file or option set (CLI exit code 2)."""


class ParamsError(ConfigError):
    """A physical-parameter value violates its constraints."""


class NumericalError(SlowlightError):
    """A solver failed numerically (CLI exit code 3)."""


class WaveBreakError(NumericalError):
    """Characteristics crossed before the requested output time (strict mode)."""


class InvariantError(SlowlightError):
    """A physics invariant check failed (CLI exit code 4)."""
