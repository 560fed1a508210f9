"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration (bad ranges, unknown kinds, bad plans)."""


class UnsupportedDenoiserError(TypeError):
    """Operation requires a capability the given denoiser does not expose."""


class TrainingDivergedError(RuntimeError):
    """Training hit a non-finite loss and was aborted."""
