"""Common exception base for the toolkit."""


class VaxtriageError(Exception):
    """Base class for all operational errors raised by this package."""
