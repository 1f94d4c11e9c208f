"""Exception types shared across the toolkit.

Each class maps to one process exit code so the CLI can translate failures
uniformly: usage errors exit 1, data errors 2, numeric errors 3, resource
errors 4.
"""

from __future__ import annotations


class GpnetError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class UsageError(GpnetError):
    """Invalid flags, configuration values, or call arguments."""

    exit_code = 1


class DataError(GpnetError):
    """Malformed or inconsistent dataset input.

    ``code`` is a short machine-readable tag, e.g. ``missing-file``,
    ``count-mismatch``, ``index-out-of-range``, ``table1-mismatch``.
    """

    exit_code = 2

    def __init__(self, message: str, code: str = "data"):
        super().__init__(message)
        self.code = code


class NumericError(GpnetError):
    """Numerical failure: non-convergence, NaN loss, asymmetric input."""

    exit_code = 3


class ResourceError(GpnetError):
    """Operation refused because it would exceed a configured memory cap."""

    exit_code = 4
