"""Exception hierarchy shared by all modules."""


class TwistVOAError(Exception):
    """Base class for every error raised by this package."""


class NonInvertible(TwistVOAError, ZeroDivisionError):
    pass


class NonRootOfUnitySpectrum(TwistVOAError):
    pass


class NotAutomorphism(TwistVOAError):
    pass


class IllFormedProduct(TwistVOAError):
    pass


class LogResidueAmbiguity(TwistVOAError):
    pass


class TableIncomplete(TwistVOAError):
    """A computation needed a table entry beyond the tabulated cutoff."""


class CutoffTooSmall(TwistVOAError):
    pass


class InvalidExponent(TwistVOAError, ValueError):
    pass


class PreconditionViolated(TwistVOAError, ValueError):
    pass


class NonTerminatingBudget(TwistVOAError):
    """The rewriting step budget was exhausted (diagnostic)."""
