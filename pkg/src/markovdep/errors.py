"""Exception hierarchy shared by the library and the command line."""


class MarkovDepError(Exception):
    """Base class for all errors raised by :mod:`markovdep`."""


class InputError(MarkovDepError, ValueError):
    """Malformed data: wrong shapes, non-finite entries, unsorted grids."""


class DomainError(InputError):
    """An argument lies outside the domain of a function (e.g. t not in [0, 1])."""


class ConfigError(MarkovDepError, ValueError):
    """Invalid copula parameters or study configuration."""


class DataIOError(MarkovDepError, OSError):
    """Missing files, missing columns, or files without usable rows."""


class NumericError(MarkovDepError, ArithmeticError):
    """A numerical routine (quadrature, root finding) failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
