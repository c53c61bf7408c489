"""Exception hierarchy shared by every module."""


class HofaError(Exception):
    """Base class for all errors raised by hofa."""


class BudgetError(HofaError):
    """An enumeration would exceed the configured size budget."""


class SchemaError(HofaError, ValueError):
    """Malformed input: wrong shapes, moduli, directions or JSON layout."""


class PreconditionError(HofaError):
    """A mathematical precondition does not hold.

    ``witness`` carries whatever object demonstrates the failure (a
    violating tuple, a point outside a set, ...), or None.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
