"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its tolerance.

    ``diagnostics`` carries whatever the failing routine knew at the time
    (error estimates, intervals, evaluation counts).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
