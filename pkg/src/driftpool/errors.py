"""Exception types shared across the package."""


class InvalidSpecError(ValueError):
    """A stream or generator specification is inconsistent or unsatisfiable."""


class CsvFormatError(ValueError):
    """A dataset CSV is malformed. Carries the offending 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class InsufficientDataError(ValueError):
    """An operation was asked to run on fewer observations than it requires."""


class GenerationError(RuntimeError):
    """A generator could not satisfy its output contract (e.g. class balance)."""
