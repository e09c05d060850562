"""Energy-efficiency modeling and design-space exploration for many-soft-core systems."""

from softgreen.errors import ConfigurationError, DatasetIntegrityError, DomainError

__version__ = "0.1.0"

__all__ = ["ConfigurationError", "DatasetIntegrityError", "DomainError", "__version__"]
