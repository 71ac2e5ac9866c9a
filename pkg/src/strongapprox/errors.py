"""Exception hierarchy shared by every module."""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for all errors raised by the package."""


class SpecMismatchError(WorkbenchError):
    pass


class InvalidGroupSpecError(WorkbenchError):
    pass


class NotInGroupError(WorkbenchError):
    pass


class InvalidModulusError(WorkbenchError):
    pass


class BudgetExceededError(WorkbenchError):
    """A resource budget was exhausted before the computation finished."""

    def __init__(self, message: str, limiting=None):
        super().__init__(message)
        self.limiting = limiting


class PartialResultError(BudgetExceededError):
    """Enumeration stopped early; ``completed`` holds what was finished."""

    def __init__(self, message: str, completed_range, elements):
        super().__init__(message, limiting=completed_range)
        self.completed_range = completed_range
        self.elements = elements


class InsufficientDataError(WorkbenchError):
    pass


class NotFoundError(WorkbenchError):
    """A search hit its height frontier. Never a claim of nonexistence."""

    def __init__(self, message: str, frontier=None):
        super().__init__(message)
        self.frontier = frontier


class BadReductionError(WorkbenchError):
    pass


class CertificationNeededError(WorkbenchError):
    pass


class InvalidTorusError(WorkbenchError):
    pass


class PipelineViolationError(WorkbenchError):
    pass


class PigeonholeViolationError(WorkbenchError):
    def __init__(self, message: str, dump=None):
        super().__init__(message)
        self.dump = dump


class ConfigRejectedError(WorkbenchError):
    pass


class FactorizationError(WorkbenchError):
    pass


class SieveInputError(WorkbenchError):
    pass
