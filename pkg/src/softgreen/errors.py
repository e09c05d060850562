"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class ConfigurationError(ValueError):
    """A spec or config lacks a field the requested operation needs."""


class DatasetIntegrityError(ValueError):
    """Embedded measurement tables disagree beyond tolerance."""
