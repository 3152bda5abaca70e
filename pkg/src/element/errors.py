"""Exception types shared across the package.

Most invalid inputs raise ``InvalidArgument`` (a ``ValueError`` subclass) so
callers that only care about "bad input" can catch the builtin. The more
specific types exist where callers need to distinguish failure modes, e.g.
a zero kth-neighbor distance versus a malformed argument.
"""


class ElementError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgument(ElementError, ValueError):
    """An argument violates a documented precondition."""


class EmptyInput(InvalidArgument):
    """An operation that needs at least one element received none."""


class DegenerateDistance(ElementError, ValueError):
    """A kth nearest-neighbor distance is zero where a positive one is required."""


class NumericalFailure(ElementError, ArithmeticError):
    """A numerical routine left its validity envelope (e.g. negative eigenvalue)."""


class EmptyGraph(ElementError, ValueError):
    """A search was issued against a graph with no nodes."""


class ParseError(ElementError, ValueError):
    """Malformed serialized input. Carries position context when known."""

    def __init__(self, message: str, *, offset: int | None = None,
                 line: int | None = None, column: int | None = None):
        self.offset = offset
        self.line = line
        self.column = column
        where = []
        if offset is not None:
            where.append(f"byte {offset}")
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ConfigError(ElementError, ValueError):
    """An experiment config failed validation. Names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
