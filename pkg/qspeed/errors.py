"""
Exception hierarchy for qspeed
"""

from typing import Optional


class QSpeedError(Exception):
    """Base class for all qspeed errors"""


class ConfigError(QSpeedError, ValueError):
    """A scenario configuration could not be parsed or validated"""

    def __init__(self, key: str, reason: str, line: Optional[int] = None, source: str = ""):
        self.key = key
        self.reason = reason
        self.line = line
        self.source = source
        if line is not None:
            where = f"line {line}"
        elif source:
            where = source
        else:
            where = "config"
        super().__init__(f"{where}: {key}: {reason}")


class DimensionError(QSpeedError, ValueError):
    """Qubit count or matrix shape is outside what the library supports"""


class NonPhysicalStateError(QSpeedError, ValueError):
    """A state or expectation value violates physicality"""


class MethodMismatchError(QSpeedError, ValueError):
    """The requested derivative method does not apply to the scenario"""


class NumericalInvariantError(QSpeedError, RuntimeError):
    """A computed result breaks an invariant beyond tolerance"""

    def __init__(self, message: str, violations: int = 0):
        self.violations = violations
        super().__init__(message)
