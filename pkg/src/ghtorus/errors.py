"""Exception hierarchy.

Everything raised on purpose derives from :class:`GhError`.  The CLI maps
:class:`ValidationError` to exit code 2 and :class:`BudgetError` to exit code 3.
"""


class GhError(Exception):
    pass


class ValidationError(GhError):
    """A config or argument violates an invariant.  ``path`` names the field."""

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class UnsupportedDimension(ValidationError):
    def __init__(self, message):
        super().__init__("N", message)


class BudgetError(GhError):
    pass


class PrecisionExhausted(BudgetError):
    pass


class BudgetExceeded(BudgetError):
    pass


class EmptySearch(BudgetError):
    pass


class NyquistViolation(GhError):
    pass


class InsufficientData(GhError):
    pass


class LengthMismatch(GhError):
    pass


class NonConstantCoefficients(GhError):
    pass


class MixedOrders(GhError):
    pass


class GridMismatch(GhError):
    pass


class ResonantFrequency(GhError):
    pass


class NotResonant(GhError):
    pass


class SequenceTooShort(GhError):
    pass


class PreconditionFailed(GhError):
    pass
