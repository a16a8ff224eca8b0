"""Shared exception hierarchy.

The CLI maps these onto exit codes: data problems (anything the user can
fix in their input or flags) exit 1, environment problems (network, IO,
missing caches) exit 2.
"""


class CiteTrendsError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(CiteTrendsError):
    """User-supplied data violates a documented format or constraint."""


class TransportError(CiteTrendsError):
    """A network request failed after exhausting retries."""


class CacheError(CiteTrendsError):
    """A replay cache is missing or incomplete."""
