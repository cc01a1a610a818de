"""Exception types shared across the package."""


class DegenerateStatisticError(ArithmeticError):
    """Raised when a self-normalized ratio is 0/0 (e.g. a constant series).

    Kept distinct from ValueError so simulation drivers can count degenerate
    draws separately instead of treating them as rejections or input bugs.
    """


class ConfigurationError(ValueError):
    """Raised when block/knot geometry cannot support the requested test."""


class CacheFormatError(ValueError):
    """Raised when a null-sample cache file is corrupt or has an unknown version."""


class CacheProvenanceError(ValueError):
    """Raised when a cache file's header does not match the expected provenance."""
