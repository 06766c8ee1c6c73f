"""Exception hierarchy.

The CLI maps the three families below to exit codes: input validation (2),
inapplicable preconditions (3), exhausted computational budgets (4).
"""


class SingdmcError(Exception):
    """Base class for all package errors."""


# -- validation --------------------------------------------------------------

class ValidationError(SingdmcError, ValueError):
    pass


class NonStochastic(ValidationError):
    pass


class NegativeEntry(ValidationError):
    pass


class EmptyAlphabet(ValidationError):
    pass


class BadParameter(ValidationError):
    pass


# -- inapplicable preconditions ----------------------------------------------

class NotApplicable(SingdmcError):
    pass


class NotSingular(NotApplicable):
    pass


class NotSymmetric(NotApplicable):
    pass


class MultiCaidUnsupported(NotApplicable):
    pass


class DominationFailure(NotApplicable):
    pass


class HypothesisFailure(NotApplicable):
    pass


class TauOutOfRange(NotApplicable):
    pass


class DimensionTooLarge(NotApplicable):
    pass


class NetTooCoarse(NotApplicable):
    pass


# -- budgets -----------------------------------------------------------------

class BudgetExceeded(SingdmcError):
    pass


class SearchBudgetExceeded(BudgetExceeded):
    pass


class EnumerationBudgetExceeded(BudgetExceeded):
    pass


class TooLarge(BudgetExceeded):
    pass


class NoConvergence(BudgetExceeded):
    pass
