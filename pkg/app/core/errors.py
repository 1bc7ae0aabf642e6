"""Exception hierarchy shared by the services and the command line."""
from typing import List, Optional


class BanditError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(BanditError, ValueError):
    """A template, experiment or request violates a documented invariant."""


class InvalidLayoutError(ConfigurationError):
    """A layout or context value lies outside its widget/dimension range."""


class LayoutSpaceTooLargeError(ConfigurationError):
    """The layout space exceeds the cap for exhaustive enumeration."""

    def __init__(self, size: int, cap: int):
        super().__init__(
            f"Layout space of {size} layouts exceeds the exhaustive cap of {cap}; "
            "use hill climbing (argmax_mode: hill_climb) instead")
        self.size = size
        self.cap = cap


class NumericalError(BanditError, ArithmeticError):
    """A posterior update produced a non-finite intermediate."""


class NonNestedModelsError(BanditError, ValueError):
    """The restricted model fits better than the full one beyond tolerance."""


class EmptyWindowError(BanditError, ValueError):
    """A regret or convergence window contains no steps."""


class ObservationLogError(ConfigurationError):
    """An observation log has malformed rows."""

    def __init__(self, message: str, rows: Optional[List[int]] = None):
        super().__init__(message)
        self.rows = rows or []


class SnapshotVersionError(BanditError):
    """A snapshot was written by an incompatible format version."""


class SnapshotCorruptError(BanditError):
    """A snapshot cannot be parsed or fails its consistency checks."""
