"""Exception hierarchy for sigcode"""

from typing import Optional


class SigcodeError(ValueError):
    """Base class for every error raised by the library"""


class InvalidDistributionError(SigcodeError):
    """Signature distribution, channel draw or mixture model failed validation"""


class InvalidVectorError(SigcodeError):
    """Vector has the wrong length or an entry outside the alphabet"""


class SupportTooLargeError(SigcodeError):
    """Exhaustive enumeration would exceed the configured cap"""

    def __init__(self, requested: int, cap: int, what: str = "support"):
        self.requested = requested
        self.cap = cap
        super().__init__(
            f"{what} size {requested} exceeds cap {cap}; use sampling / Monte Carlo instead"
        )


class UnsupportedConfigurationError(SigcodeError):
    """Closed form or inference case requested outside its domain"""


class InconsistentObservationError(SigcodeError):
    """Level observation cannot come from any number of users"""


class InferenceError(SigcodeError):
    """Gain system is singular or its solution does not reproduce the levels"""

    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)


class CaseNotCoveredError(SigcodeError):
    """Channel/masking parameters fall outside the published optimal-power cases"""


class ConfigError(SigcodeError):
    """Experiment configuration could not be loaded"""
