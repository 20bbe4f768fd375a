"""Exception types shared across the package."""


class ERWError(Exception):
    """Base class for all errors raised by erwlab."""


class InvalidStateError(ERWError, ValueError):
    """A walk state or history violates |s| <= n, parity, or non-emptiness."""


class DomainError(ERWError, ValueError):
    """A function was evaluated outside its mathematical domain."""
