"""Exception hierarchy. Each class carries a short machine-readable code used by the CLI."""


class RydNoiseError(Exception):
    code = "E_GENERIC"


class RegisterError(RydNoiseError, ValueError):
    code = "E_REGISTER"


class PulseError(RydNoiseError, ValueError):
    code = "E_PULSE"


class ConfigurationError(RydNoiseError, ValueError):
    code = "E_CONFIG"


class IntegrationError(RydNoiseError, ArithmeticError):
    code = "E_INTEGRATION"


class ConsistencyError(RydNoiseError, ValueError):
    code = "E_CONSISTENCY"


class DivergenceError(RydNoiseError, ArithmeticError):
    """Raised when a training loss or Q-value becomes non-finite."""

    code = "E_DIVERGENCE"

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class DataError(RydNoiseError, ValueError):
    code = "E_DATA"
