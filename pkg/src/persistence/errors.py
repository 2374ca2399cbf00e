"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """A parameter lies outside the range an operation is defined on."""


class ValidationError(ValueError):
    """An input object (stream, model, value set) is malformed."""


class EnumerationGuardError(RuntimeError):
    """An exhaustive enumeration would exceed its hard size limit."""
