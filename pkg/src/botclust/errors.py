"""Exception hierarchy shared by all modules."""


class BotclustError(Exception):
    """Base class for all errors raised by botclust."""


class DataIntegrityError(BotclustError, ValueError):
    """Input records violate a structural invariant (duplicate ids, gaps, empty fields)."""


class ParameterError(BotclustError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DomainError(BotclustError, ValueError):
    """A value lies outside the support of a distribution (e.g. a non-minimal clustering)."""


class UnknownAddressError(BotclustError, KeyError):
    """Prediction requested for an address that never occurred in the training data."""

    def __str__(self):
        return f"unknown address: {self.args[0]!r}" if self.args else "unknown address"


class ConfigError(BotclustError, ValueError):
    """Invalid configuration (world config, chain config, CLI config file)."""
