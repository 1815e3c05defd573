"""Error hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: DataError -> 1, UsageError -> 2,
anything else -> 3 (internal).
"""


class OrderlabError(Exception):
    """Base class for all toolkit errors."""


class DataError(OrderlabError):
    """Malformed or inconsistent input data (files, tables, protocols)."""


class UsageError(OrderlabError):
    """Invalid invocation: bad parameter values or missing inputs."""


class ProtocolError(DataError):
    """External scorer violated the line protocol or the TSV schema."""


class BackendError(DataError):
    """A scoring backend became unusable (e.g. the process died)."""
