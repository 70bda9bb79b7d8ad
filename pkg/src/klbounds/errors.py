"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function or type."""


class SolverError(RuntimeError):
    """The simplex solver could not produce a trustworthy answer."""


class BisectionError(RuntimeError):
    """A feasibility bisection could not be started or did not converge."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class NonContiguousError(RuntimeError):
    """The set of feasible masses is not a single interval."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan


class ParseError(ValueError):
    """Malformed input file."""


class ConfigError(ValueError):
    """Invalid run configuration. ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class TruncationWarning(UserWarning):
    """The spectral grid may end too early for the smallest constraint point."""
