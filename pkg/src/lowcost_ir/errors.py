"""Exception hierarchy shared by every module.

The CLI maps these classes onto exit codes: ``ConfigError`` -> 2,
``DataError`` (and its ``ParseError`` subclass) -> 3, ``DegenerateError`` -> 4.
"""


class LowCostIRError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LowCostIRError):
    """Invalid parameters or configuration."""


class DataError(LowCostIRError):
    """Input data violates a contract (shapes, labels, scales)."""


class ParseError(DataError):
    """A TREC/CSV input line could not be parsed."""

    def __init__(self, message, line_no=None, source=None):
        self.line_no = line_no
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line_no is not None:
            where += f"line {line_no}: "
        elif where:
            where += " "
        super().__init__(where + message)


class DegenerateError(LowCostIRError):
    """A numerical computation is undefined for the given input."""
