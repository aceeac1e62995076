"""Exception types shared across the toolkit."""


class HbError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(HbError):
    """A data file or record does not match its documented schema."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class RegistryError(HbError):
    """Registry content violates a hard invariant (duplicates, unknown axis...)."""


class CompatibilityError(HbError):
    """A descriptor was paired with a noun its gender restriction forbids."""


class RenderError(HbError):
    """A template slot and noun phrase disagree on plurality."""


class JoinError(HbError):
    """Score records reference unknown or duplicate ids."""


class InsufficientDataError(HbError):
    """Not enough data in scope to compute the requested report."""


class DegenerateDirectionError(HbError):
    """A descriptor's mean style profile coincides with the global mean."""
