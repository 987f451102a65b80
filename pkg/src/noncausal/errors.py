"""Exception hierarchy.

Every error raised on purpose by the package derives from ``NoncausalError``.
The CLI maps the four top-level families onto its exit codes.
"""


class NoncausalError(Exception):
    """Base class for all package errors."""


# -- input / data problems (CLI exit 2) -------------------------------------

class InputError(NoncausalError):
    pass


class ParseError(InputError):
    """A CSV or key-value file could not be parsed.

    ``row`` is the 1-based data row (header excluded) when known.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class DateParseError(ParseError):
    pass


class ValueParseError(ParseError):
    pass


class DuplicateDateError(ParseError):
    pass


class GapError(ParseError):
    pass


class DomainError(InputError):
    """Input outside the mathematical domain (log of a non-positive price...)."""


class InsufficientDataError(InputError):
    pass


class AlignmentError(InputError):
    pass


class NonStationaryError(InputError):
    pass


class UnsupportedOrderError(InputError):
    pass


class CollinearityError(InputError):
    pass


# -- estimation (CLI exit 3) -------------------------------------------------

class ConvergenceError(NoncausalError):
    """No start produced a finite optimum.

    ``best`` carries whatever diagnostics were collected (may be None).
    """

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


# -- forecasting (CLI exit 4) ------------------------------------------------

class DegenerateWeightsError(NoncausalError):
    def __init__(self, message, ess=None):
        self.ess = ess
        if ess is not None:
            message = f"{message} (effective sample size {ess:.3g})"
        super().__init__(message)


# -- evaluation (CLI exit 5) -------------------------------------------------

class EvaluationError(NoncausalError):
    pass
