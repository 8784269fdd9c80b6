"""Exception hierarchy shared by every kgshield module."""


class KGShieldError(Exception):
    """Base class for all errors raised by kgshield."""


class InvalidVertex(KGShieldError, KeyError):
    """A vertex id is not part of the graph."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class InvalidParameter(KGShieldError, ValueError):
    pass


class ParseError(KGShieldError, ValueError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(KGShieldError, ValueError):
    pass


class IoError(KGShieldError, OSError):
    pass


class UnsupportedProgram(KGShieldError):
    """The rule program (or a weight-dependent step) needs a weighted graph."""


class QueryProgramMismatch(KGShieldError):
    pass


class NotWeaklyConnected(KGShieldError):
    def __init__(self, component_sizes: list[int]):
        self.component_sizes = sorted(component_sizes, reverse=True)
        super().__init__(
            "input graph is not weakly connected; component sizes: "
            + ", ".join(map(str, self.component_sizes))
        )
