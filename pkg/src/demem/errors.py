"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapacityError(RuntimeError):
    """An exact routine was asked to run past its configured size cap."""


class GenerationError(RuntimeError):
    """A random instance could not be generated within the retry budget."""


class PropertyViolation(AssertionError):
    """A checked theorem statement failed on a concrete instance."""

    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance


class SlotStateError(RuntimeError):
    """The slot runtime was asked to route with no active slot."""


class ConfigError(DomainError):
    """An experiment configuration failed validation; ``field`` names the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
