"""Exception types shared across the package and mapped to CLI exit codes."""

from __future__ import annotations


class CertificateRefusal(Exception):
    """A perturbative computation was requested for an uncertified walk."""

    def __init__(self, verdict: str, message: str | None = None):
        self.verdict = verdict
        super().__init__(
            message
            or f"contractivity certificate verdict is {verdict!r}; refusing"
        )


class SeriesDivergenceError(RuntimeError):
    """Neumann series terms failed to decay within the term cap."""


class ResourceCapError(RuntimeError):
    """A simulation exceeded its block budget."""


class DegeneracyError(RuntimeError):
    """A linear system that the certificate should preclude was singular."""


class DegenerateCovarianceError(ValueError):
    """Covariance matrix is singular; carries the null direction."""

    def __init__(self, null_direction, message: str | None = None):
        self.null_direction = null_direction
        super().__init__(
            message
            or f"covariance matrix is singular along {null_direction}"
        )


class ConfigError(ValueError):
    """Invalid experiment configuration."""
