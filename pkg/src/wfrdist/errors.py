"""Exception types raised by the package."""


class InvalidInputError(ValueError):
    """Malformed or out-of-contract input (empty measure, bad shapes, ...)."""


class MeshFormatError(InvalidInputError):
    """A mesh or measure file could not be parsed."""

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


class NumericFailureError(ArithmeticError):
    """Non-finite values appeared during an iterative solve."""

    def __init__(self, message, iteration=None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
