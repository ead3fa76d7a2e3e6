"""Exception taxonomy.

Every error raised by this package carries a short machine-readable
``category`` string; the CLI prints it on stderr and maps it to a stable
exit code so callers can branch on failure kind without parsing prose.
"""

from __future__ import annotations


class OeprecError(Exception):
    """Base class for all package errors."""

    category = "internal"


class ParameterError(OeprecError):
    """A function or CLI argument is out of its documented range."""

    category = "parameter"


class DataError(OeprecError):
    """Input data is malformed: bad CSV rows, non-finite samples, mismatched lengths."""

    category = "data"


class ConfigError(OeprecError):
    """A configuration file could not be parsed or contains invalid values."""

    category = "config"


class TrainingError(OeprecError):
    """Model training failed (non-convergence, degenerate training set)."""

    category = "training"


class VersionError(OeprecError):
    """A stored artifact was written by an incompatible major version."""

    category = "version"


class IntegrityError(OeprecError):
    """A stored artifact fails its checksum; refuse to load a partial model."""

    category = "integrity"


#: exit codes used by the CLI, keyed by error category
EXIT_CODES = {
    "parameter": 2,
    "data": 3,
    "config": 4,
    "training": 5,
    "version": 6,
    "integrity": 7,
    "internal": 1,
}
