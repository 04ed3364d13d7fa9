"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 1, NumericalError -> 2.
"""


class GPGradeError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GPGradeError, ValueError):
    """Invalid caller input: bad shapes, grades, files, or configuration."""


class ParseError(InputError):
    """Malformed feature CSV; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelFormatError(InputError):
    """Model archive cannot be loaded: bad magic, version, checksum, or truncation."""


class NumericalError(GPGradeError, RuntimeError):
    """Numerical failure: matrix factorization or optimization did not succeed."""
