"""Exception taxonomy shared across the package.

Three failure classes are distinguished so callers can react precisely:
mathematical domain violations, broken interface contracts, and bad
configuration input. All are ValueError subclasses, so generic handling
still works.
"""


class PassbandError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PassbandError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(PassbandError, ValueError):
    """A caller violated an interface contract (for example, mixed group
    sizes in one batch, or requesting a prefix from a degenerate group)."""


class ConfigError(PassbandError, ValueError):
    """A configuration file or key is invalid; the message names the key."""
