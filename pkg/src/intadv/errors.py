"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A scheme, network or attack configuration is incomplete or inconsistent."""


class FormatError(ValueError):
    """A file does not follow its declared on-disk format."""
