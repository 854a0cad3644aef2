"""Exception types shared across the package."""


class ContractViolationError(ValueError):
    """An operation was called with arguments that violate its contract."""


class EnumerationCapError(RuntimeError):
    """Exhaustive search was refused because the subset count exceeds the cap."""


class LoadError(ValueError):
    """A feature file is malformed; the message names the offending location."""
