"""Exception and warning types shared across the package."""


class DnmSimError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(DnmSimError, ValueError):
    """Operands have incompatible shapes for the requested operation."""


class NonHermitianError(DnmSimError, ValueError):
    """A matrix that must be Hermitian is not, beyond tolerance."""


class LayoutError(DnmSimError, ValueError):
    """A composite-space layout is invalid or exceeds the size cap."""


class ParameterError(DnmSimError, ValueError):
    """A physical parameter is out of its admissible range."""


class IntegrationError(DnmSimError, RuntimeError):
    """Time integration aborted (trace drift, NaN, bad configuration)."""


class FitError(DnmSimError, ValueError):
    """A fit cannot be performed on the given data."""


class ConfigError(DnmSimError, ValueError):
    """A run configuration file or override is invalid."""


class ValidityWarning(UserWarning):
    """Parameters leave the regime in which the model is trustworthy."""


class TruncationWarning(UserWarning):
    """The Fock-space truncation looks too small for the run."""
