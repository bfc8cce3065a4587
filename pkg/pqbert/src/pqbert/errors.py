"""Exception hierarchy for the embedding trainer."""


class PqBertError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PqBertError):
    """A configuration value is out of range or inconsistent."""


class IdOutOfRange(PqBertError):
    """A sub-word id falls outside [0, k_star] (mask id included)."""


class EmptyMaskPlan(PqBertError):
    """Every head has zero masked positions; the loss is undefined."""


class AllRowsInvalid(PqBertError):
    """No valid probe rows remain to pool an embedding from."""


class DataMismatch(PqBertError):
    """Dataset shape or vocabulary disagrees with the model config."""
