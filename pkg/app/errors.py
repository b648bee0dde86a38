"""
Errors - Exception hierarchy shared by the library, CLI and HTTP router

The CLI maps these to exit codes and the router maps them to HTTP errors.
"""

from typing import List, Optional


class CommutationError(Exception):
    """Base class for every error raised by the commutation package"""


class DomainError(CommutationError, ValueError):
    """An input lies outside the domain of an operation"""


class ConfigError(DomainError):
    """One or more configuration invariants are violated"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class FrameError(DomainError):
    """An electrical angle was given in the wrong position frame"""


class UnsupportedError(CommutationError):
    """Technique or phase-count combination that is not defined"""

    def __init__(self, message: str, technique: Optional[str] = None):
        self.technique = technique
        super().__init__(message)
