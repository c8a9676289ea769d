"""Exception hierarchy.

Each class carries the process exit status the command line maps it to.
"""


class PretopoError(Exception):
    exit_code = 1


class InvalidArgumentError(PretopoError, ValueError):
    exit_code = 2


class InvalidModelError(PretopoError, ValueError):
    exit_code = 2


class ConfigError(PretopoError, ValueError):
    exit_code = 2


class EmptyInputError(PretopoError, ValueError):
    exit_code = 2


class ParseError(PretopoError, ValueError):
    """Malformed text input; ``line`` and ``column`` are 1-based when known."""

    exit_code = 3

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class SizeError(PretopoError, ValueError):
    """An enumeration would exceed a configured size cap."""

    exit_code = 4
