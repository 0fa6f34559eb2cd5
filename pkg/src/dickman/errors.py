"""Exception hierarchy shared by all modules, with CLI exit codes."""


class DickmanError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(DickmanError):
    """Input outside the documented domain of an operation."""

    exit_code = 2


class AccuracyError(DickmanError):
    """A tolerance could not be met within the refinement limit.

    Carries the accuracy actually achieved in ``achieved``.
    """

    exit_code = 3

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ResourceError(DickmanError):
    """A compute or memory budget was exceeded."""

    exit_code = 4

    def __init__(self, message, completed=None):
        super().__init__(message)
        # completed prefix of a scan, when applicable
        self.completed = completed


class IntegrityError(DickmanError):
    """An internal consistency check failed (e.g. bound ordering)."""

    exit_code = 5
