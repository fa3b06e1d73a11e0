class BenignSplitError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(BenignSplitError):
    pass


class SchemaError(ConfigError):
    pass


class DataError(BenignSplitError):
    """Input data violates a contract (shape, values, labels)."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)
        self.row = row
