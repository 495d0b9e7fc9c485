"""Exception hierarchy shared by every darglade module."""


class DarError(Exception):
    """Base class for all package errors."""


class SignedLogOverflow(DarError, OverflowError):
    """A signed-log value is too large to decode as a float."""


class NonConvergence(DarError):
    """An iterative routine exhausted its budget before meeting tolerance."""


class DegenerateSeries(DarError, ValueError):
    """The series carries too little variation to be fitted."""


class LengthMismatch(DarError, ValueError):
    pass


class SingularTerm(DarError, ArithmeticError):
    """A log-modulus term of the natural Lyapunov estimator is log(0)."""


class EmptySet(DarError, ArithmeticError):
    """A truncated index set carries zero total weight."""


class NoRoot(DarError, ValueError):
    """The stationarity boundary cannot be bracketed at this phi."""


class SingularSigma(DarError, ArithmeticError):
    pass


class ConfigError(DarError, ValueError):
    pass


class DataError(DarError, ValueError):
    """Malformed input data (CSV parse failures and the like)."""
