"""Exception types shared by every module.

Each error carries an ``exit_code``: 2 for invalid input, 3 when a grid or
time step is too coarse for the requested computation.
"""


class ShearlabError(Exception):
    exit_code = 2

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": type(self).__name__, "message": str(self)}
        out.update({k: v for k, v in self.details.items() if v is not None})
        return out


class BadParameter(ShearlabError, ValueError):
    pass


class NyquistViolation(ShearlabError, ValueError):
    pass


class EmbeddingFailure(ShearlabError, RuntimeError):
    pass


class TooFewPoints(ShearlabError, ValueError):
    pass


class DomainExceeded(ShearlabError, ValueError):
    pass


class BundleMismatch(ShearlabError, ValueError):
    pass


class NonPositiveOrdinate(ShearlabError, ValueError):
    pass


class ZeroModePresent(ShearlabError, ValueError):
    pass


class ZeroField(ShearlabError, ValueError):
    pass


class NoCrossing(ShearlabError, RuntimeError):
    """The curve never fell below the threshold; ``lower_bound`` is the last time."""

    def __init__(self, message, lower_bound=None, **details):
        super().__init__(message, lower_bound=lower_bound, **details)
        self.lower_bound = lower_bound


class UnderResolved(ShearlabError, RuntimeError):
    """The grid cannot resolve the phase or the solution's small scales."""

    exit_code = 3

    def __init__(self, message, max_usable=None, required_n=None, **details):
        super().__init__(message, max_usable=max_usable, required_n=required_n, **details)
        self.max_usable = max_usable
        self.required_n = required_n


class ResolutionExceeded(ShearlabError, ValueError):
    exit_code = 3


class StepTooLarge(ShearlabError, ValueError):
    exit_code = 3
