class EinselectError(ValueError):
    """Base class for errors raised by this package."""


class DimensionError(EinselectError):
    pass


class NotHermitianError(EinselectError):
    pass


class PointerBasisError(EinselectError):
    """Raised when a pointer basis is requested for a model that has none."""


class ConfigError(EinselectError):
    pass
