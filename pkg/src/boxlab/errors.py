"""Exception types shared across the package."""


class BoxlabError(Exception):
    """Base class for errors raised by boxlab."""


class ConfigError(BoxlabError, ValueError):
    """Invalid parameters, malformed configs, or violated preconditions."""


class NumericalError(BoxlabError, ArithmeticError):
    """A numerical routine failed to converge or produced a non-finite value."""


class DegeneratePosteriorError(NumericalError):
    """Both posterior integrals underflowed even after rescaling."""
