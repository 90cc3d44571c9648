"""Exception types shared across the laboratory.

Exit-code mapping for the CLI lives in :mod:`identlab.cli`; library code
raises these and never calls sys.exit.
"""


class IdentLabError(Exception):
    """Base class for all identlab errors."""


class CatalogError(IdentLabError):
    """Unknown catalog member or malformed member metadata."""


class DomainError(IdentLabError):
    """A point lies outside a model's domain, or a probe region leaves it."""


class DegenerateExampleError(IdentLabError):
    """Geometric preconditions violated (affine dependence, 0 not in relint, ...)."""


class EmptyProbeError(IdentLabError):
    """A sampler produced no admissible points (tube/window filtered everything)."""


class OracleError(IdentLabError):
    """The global-minimization grid oracle failed (unbounded below, all-inf grid, ...)."""


class DivergenceError(IdentLabError):
    """An iterate left the divergence guard region."""


class ProjectionError(IdentLabError):
    """Nearest-point projection failed to converge or left its trust region."""


class ConfigError(IdentLabError):
    """Bad CLI/config input (unknown key, out-of-range value, missing field)."""
