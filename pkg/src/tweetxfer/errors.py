"""Shared exception types."""


class DataError(ValueError):
    """Malformed or inconsistent input data (bad file, unknown label, ...).

    The CLI maps this to exit code 2, as opposed to usage errors (exit 1).
    """
