"""Exception taxonomy.

Three failure classes matter to callers (and to the CLI exit codes):
invalid inputs, numeric certification failures (a truncated series or a
normalization check could not be certified to the requested accuracy),
and resource blowups (a sampled population exceeding its node cap).
"""


class GeomGWError(Exception):
    """Base class for all package errors."""


class ValidationError(GeomGWError, ValueError):
    """Bad parameters or a precondition violation. CLI exit code 1."""


class TruncationError(GeomGWError, ArithmeticError):
    """An adaptive series truncation could not certify the requested
    relative accuracy. CLI exit code 2."""


class CertificationError(GeomGWError, ArithmeticError):
    """A computed law failed a normalization or residual certificate.
    CLI exit code 2."""


class ResourceError(GeomGWError, RuntimeError):
    """A sampler exceeded its configured node budget. CLI exit code 1."""


class AuditError(GeomGWError, AssertionError):
    """A sampled object failed its structural self-check. CLI exit code 2."""
