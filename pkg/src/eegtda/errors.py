"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``category`` string which the
CLI prints as JSON on stderr, so scripts can dispatch on failures without
parsing prose.
"""
from __future__ import annotations


class EegTdaError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"


class ParseError(EegTdaError):
    """Malformed input file (bad header, ragged row, truncated record)."""

    category = "parse"


class UnsupportedFormatError(EegTdaError):
    """File is structurally valid but uses a feature we do not support."""

    category = "unsupported-format"


class ConfigError(EegTdaError):
    """Invalid configuration value or inconsistent arguments."""

    category = "config"


class RangeError(EegTdaError):
    """Index or window out of range."""

    category = "range"


class DataError(EegTdaError):
    """Numeric data violates an invariant (non-finite values etc.)."""

    category = "data"


class InsufficientDataError(EegTdaError):
    """Not enough samples or rows for the requested operation."""

    category = "insufficient-data"


class NumericalError(EegTdaError):
    """A numerical routine failed beyond recoverable regularization."""

    category = "numerical"


class AmbiguousModelError(EegTdaError):
    """Model selection criterion did not identify the requested count."""

    category = "ambiguous-model"


class GenerationError(EegTdaError):
    """Synthetic data generation hit an unstable regime."""

    category = "generation"


class NotFoundError(EegTdaError):
    """A referenced artifact (segment, store entry) does not exist."""

    category = "not-found"


class StoreHashError(EegTdaError):
    """Store artifacts were produced under a different configuration."""

    category = "store-hash"
