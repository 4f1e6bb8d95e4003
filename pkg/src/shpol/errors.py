"""Exception types shared across the package."""


class UndefinedMeasurementError(ValueError):
    """A measurement is requested where it has no defined value (e.g. zero power)."""


class ConfigError(ValueError):
    """A configuration file or value failed validation.

    Carries the offending field name so the CLI can point at it.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
