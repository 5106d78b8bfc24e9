"""Exception hierarchy shared across the package."""


class PromptGateError(Exception):
    """Base class for all promptgate errors."""


class ContractViolation(PromptGateError, ValueError):
    """An argument or state violated a documented precondition."""


class IntegrityError(PromptGateError):
    """Persisted or received data failed a structural or checksum validation."""


class TransportError(PromptGateError):
    """A remote backend could not be reached or answered abnormally.

    ``retryable`` tells callers whether another attempt may succeed;
    ``attempts`` counts how many were already made.
    """

    def __init__(self, message: str, *, retryable: bool = True, attempts: int = 1):
        super().__init__(message)
        self.retryable = retryable
        self.attempts = attempts


class AuthError(TransportError):
    """Credential rejection; never retryable."""

    def __init__(self, message: str, *, attempts: int = 1):
        super().__init__(message, retryable=False, attempts=attempts)


class TrainingError(PromptGateError):
    """Training could not start or finish with the given data/config."""


class DivergenceError(TrainingError):
    """Optimization produced a non-finite loss."""


class DatasetError(PromptGateError, ValueError):
    """A dataset file failed to parse or validate."""


class StratificationError(DatasetError):
    """A class is too small to be split across all partitions."""
