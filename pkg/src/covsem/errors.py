class ContractViolation(ValueError):
    """A caller broke an operation's precondition."""


class GenerationError(RuntimeError):
    """Synthetic data could not be produced for the requested geometry."""


class ConfigError(ValueError):
    """Invalid experiment or episode configuration.

    ``path`` names the offending field (dotted), when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss, gradient or parameter)."""
