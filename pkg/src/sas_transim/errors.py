"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input: malformed case data, out-of-range parameters, misuse of an API."""


class CaseParseError(ValidationError):
    """A case document violates the schema; the message names field and location."""


class NumericalError(RuntimeError):
    """A computation failed numerically (divergence, singular system, no root)."""


class DivergenceError(NumericalError):
    """The state or a series coefficient left the finite range.

    ``t`` is the simulation time (or window-local time) at which the failure
    was detected, ``machine`` the index of the offending machine when known.
    """

    def __init__(self, message, t=None, machine=None):
        super().__init__(message)
        self.t = t
        self.machine = machine
