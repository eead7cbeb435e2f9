"""Exception types shared across the package.

Each maps to a CLI exit code: configuration problems exit 3, numerical
non-convergence exits 4, and failed mathematical checks exit 2.
"""


class RwreError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RwreError):
    """Bad user input: malformed config, unknown model, invalid sizes."""


class ModelError(ConfigurationError):
    """A cycle model violates its structural constraints."""


class ParameterError(ConfigurationError):
    """A function argument is outside its documented domain."""


class ContractError(RwreError):
    """An input object fails a precondition (e.g. a kernel that must be
    reversible is not)."""


class DataError(RwreError):
    """An artifact on disk is missing or malformed."""


class NumericalError(RwreError):
    """An iterative method failed to reach its tolerance within its cap."""
