"""Exception and warning types shared across the package."""

from __future__ import annotations


class GpboError(Exception):
    """Base class for all errors raised by this package."""


class SpaceError(GpboError):
    """Structural mismatch between an arm, a vector, and a search space."""


class DomainError(GpboError):
    """A value lies outside the domain it is required to be in."""


class UsageError(GpboError):
    """An operation was called out of sequence or with an empty history."""


class NumericalError(GpboError):
    """A linear-algebra or optimization step failed beyond recovery.

    ``diagnostics`` carries whatever the failing step knew about the
    offending matrix (condition estimate, eigenvalue range, jitter tried).
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(GpboError):
    """Base class for run-configuration problems."""


class ConfigFileError(ConfigError):
    """The configuration file is missing or unreadable."""


class ConfigParseError(ConfigError):
    """The configuration file is not a well-formed JSON document."""


class ConfigSchemaError(ConfigError):
    """The configuration document violates the documented schema."""


class EvaluatorFault(GpboError):
    """An external evaluator failed to produce a usable observation.

    ``kind`` is one of "spawn-failure", "nonzero-exit", "timeout",
    "malformed-output".
    """

    def __init__(self, kind: str, detail: str):
        super().__init__(f"evaluator fault ({kind}): {detail}")
        self.kind = kind
        self.detail = detail


class NumericsWarning(UserWarning):
    """Numerical result outside its theoretical range by more than rounding."""
