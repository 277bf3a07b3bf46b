"""Exception hierarchy shared across the package."""


class NcaeError(Exception):
    """Base class for all package errors."""


class DomainError(NcaeError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DimensionError(NcaeError, ValueError):
    """Array shapes do not match the architecture or each other."""


class SingularityError(NcaeError, ArithmeticError):
    """A linear solve on the manifold became (numerically) singular."""


class ConfigError(NcaeError, ValueError):
    """Invalid configuration values or schema."""


class FormatError(NcaeError, IOError):
    """A dataset or checkpoint file on disk is malformed."""


class TrainingError(NcaeError, RuntimeError):
    """Training had to abort (non-finite loss, repeated retraction failure)."""
