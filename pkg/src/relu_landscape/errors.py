"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition (shape, finiteness, range)."""


class ParseError(InvalidInputError):
    """A dataset, pattern or config file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class NotASaddleError(Exception):
    """The requested active subset yields a minimum rather than a saddle.

    Raised when an inactive neuron has a vanishing hyperplane normal, i.e. its
    gradient in the combined parameterization is already zero.
    """

    def __init__(self, message, neurons=()):
        self.neurons = tuple(neurons)
        super().__init__(message)
