"""Exception hierarchy shared by every module of the package."""


class GammafitError(Exception):
    """Base class for all errors raised by gammafit."""


class ValidationError(GammafitError):
    """Invalid input data or configuration.

    ``location`` names the offending field or item (e.g. ``"point_group[2]"``).
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class ParseError(ValidationError):
    """Malformed configuration or dataset file."""


class NotAGroup(ValidationError):
    pass


class LatticeNotPreserved(ValidationError):
    pass


class NotInvertible(ValidationError):
    pass


class EmptyFamily(ValidationError):
    pass


class BadKappa(ValidationError):
    pass


class InconsistentSpec(ValidationError):
    """Objects built for different groups/lattices were mixed."""


class NumericalError(GammafitError):
    """A numerical identity or precondition failed beyond tolerance."""


class NotHermitian(NumericalError):
    pass


class NotPsdWhenRequired(NumericalError):
    pass


class RankCollapse(NumericalError):
    pass


class NotParseval(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class StateMissing(GammafitError):
    pass
