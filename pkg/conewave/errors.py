"""
Exception hierarchy for conewave.

Library code raises these; only the CLI runner turns them into exit codes
and JSON error summaries.
"""

from typing import List, Optional, Tuple


class ConeWaveError(Exception):
    """Base class for every error raised by the library."""


class DomainError(ConeWaveError, ValueError):
    """An argument lies outside the supported domain."""


class LengthMismatch(DomainError):
    """Sample vector does not match the plan it is applied with."""


class PositivityViolation(ConeWaveError):
    """Smallest cross-section eigenvalue fails lambda + (n-2)^2/4 > 0."""

    def __init__(self, message: str, value: Optional[float] = None):
        super().__init__(message)
        self.value = value


class ConvergenceError(ConeWaveError):
    """Angular truncation has not converged."""


class UnsupportedEvaluation(ConeWaveError):
    """The cross-section model has no pointwise eigenfunctions."""


class TailNotConverged(ConeWaveError):
    def __init__(self, message: str, partial_sum: float, tail_bound: float):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.tail_bound = tail_bound


class FitUnstable(ConeWaveError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class NonAdmissiblePair(ConeWaveError):
    pass


class BetaOutOfRange(ConeWaveError):
    def __init__(self, message: str, window: Tuple[float, float]):
        super().__init__(message)
        self.window = window


class SOutOfRange(ConeWaveError):
    pass


class POutOfRange(ConeWaveError):
    pass


class SigmaOnSpectrum(ConeWaveError):
    pass


class StepTooLarge(ConeWaveError):
    pass


class BlowupSuspected(ConeWaveError):
    def __init__(self, message: str, t: float, h1_norm: float):
        super().__init__(message)
        self.t = t
        self.h1_norm = h1_norm


class ConfigError(ConeWaveError, ValueError):
    """Base for config problems; `messages` lists one entry per offending key/line."""

    def __init__(self, messages: List[str]):
        super().__init__("; ".join(messages))
        self.messages = list(messages)


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class ConstraintViolation(ConfigError):
    pass
