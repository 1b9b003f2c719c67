"""Radar altimeter / C-band 5G coexistence simulator and compliance toolkit."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    ContractError,
    DomainError,
    OutOfTableError,
    ValidationError,
)

__all__ = [
    "__version__",
    "ConfigurationError",
    "ContractError",
    "DomainError",
    "OutOfTableError",
    "ValidationError",
]
