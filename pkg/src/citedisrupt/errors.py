"""Exception types shared across the package.

Each class carries the CLI exit code that reports it, so the command-line
layer can map failures without inspecting messages.
"""


class CiteDisruptError(Exception):
    exit_code = 1


class ValidationError(CiteDisruptError, ValueError):
    exit_code = 2


class ParseError(CiteDisruptError, ValueError):
    exit_code = 3

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ConvergenceError(CiteDisruptError, ArithmeticError):
    exit_code = 5

    def __init__(self, message, trace=None):
        self.trace = list(trace) if trace is not None else []
        super().__init__(message)


class PaperLookupError(CiteDisruptError, KeyError):
    exit_code = 2

    def __str__(self):
        return f"unknown paper id: {self.args[0]!r}"


class DomainError(ValidationError):
    """A value lies outside the domain of a transform."""


class StageError(CiteDisruptError):
    """A pipeline stage failed; wraps the cause and keeps its exit code."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        if isinstance(cause, CiteDisruptError):
            self.exit_code = cause.exit_code
        elif isinstance(cause, OSError):
            self.exit_code = 4
        super().__init__(f"{stage}: {cause}")
