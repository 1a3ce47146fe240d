"""Exception types shared across the package."""


class WindcastError(Exception):
    """Base class for all package errors."""


class SchemaError(WindcastError):
    """A file does not match its declared schema."""


class ShapeError(WindcastError):
    """Array dimensions are inconsistent with an operation's contract."""


class DomainError(WindcastError):
    """Input values fall outside the mathematical domain of an operation."""


class RankError(WindcastError):
    """A regression design matrix is rank deficient."""


class GeometryError(WindcastError):
    """Point-set or mesh geometry is degenerate."""


class NumericalError(WindcastError):
    """A factorization or iterative solver failed."""


class ConfigError(WindcastError):
    """A pipeline configuration is missing, malformed, or inconsistent."""
