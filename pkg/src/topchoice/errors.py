"""Exception hierarchy shared by the whole package.

CLI exit codes: ValidationError (and subclasses) map to exit code 2,
NumericalError to exit code 3.
"""


class TopChoiceError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TopChoiceError, ValueError):
    """Invalid input: malformed data, broken invariants, bad arguments."""


class ParseError(ValidationError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DesignError(ValidationError):
    """A comparison design that cannot be realized (e.g. k > n)."""


class UnsupportedFormError(ValidationError):
    """A representation was requested that the model does not admit."""


class UnsupportedModelError(ValidationError):
    """An operation restricted to a specific noise family got another one."""


class NumericalError(TopChoiceError, ArithmeticError):
    """A numerical routine failed to reach its target accuracy."""

    def __init__(self, message: str, achieved: float | None = None):
        self.achieved = achieved
        if achieved is not None:
            message = f"{message} (achieved tolerance {achieved:.3e})"
        super().__init__(message)


class DisconnectedError(ValidationError):
    """The comparison graph is not connected; names a separating partition."""

    def __init__(self, component: tuple[int, ...], rest: tuple[int, ...]):
        self.component = component
        self.rest = rest
        super().__init__(
            "comparison graph is disconnected: no comparisons join items "
            f"{list(component)} with items {list(rest)}"
        )
