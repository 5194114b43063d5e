"""Exception types shared across the package.

ValueError subclasses signal bad inputs or configuration (CLI exit code 1),
RuntimeError subclasses signal numerical failures at run time (exit code 2).
"""


class AudioFormatError(ValueError):
    """Input audio is unreadable or not in a supported PCM WAV encoding."""


class ParameterDomainError(ValueError):
    """A compression parameter lies outside its valid domain."""


class StateFormatError(ValueError):
    """A serialized compressor state or head file is corrupt or unsupported."""


class ConfigError(ValueError):
    """A run configuration file or override is invalid."""


class TrialResolutionError(ValueError):
    """A trial list references utterance ids with no embedding available."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""
