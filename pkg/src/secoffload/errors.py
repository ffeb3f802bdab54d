"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A value outside an operation's documented domain."""


class ConfigError(ValueError):
    """A scenario or sweep configuration that cannot be used."""


class SearchSpaceTooLarge(InvalidArgument):
    """Exhaustive enumeration was refused by the size guard."""


class ProtocolViolation(RuntimeError):
    """An object was driven outside its allowed call sequence (e.g. step after done)."""


class MalformedEnvelope(InvalidArgument):
    """A sealed envelope is structurally unusable."""
