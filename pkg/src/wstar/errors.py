"""Exception hierarchy shared by every module of the package."""


class WStarError(Exception):
    """Base class; the CLI maps any subclass to exit code 2."""


class NotHermitian(WStarError):
    pass


class NoConvergence(WStarError):
    pass


class NotProjection(WStarError):
    pass


class NotUnitary(WStarError):
    pass


class NotIsometry(WStarError):
    pass


class NotUnital(WStarError):
    pass


class DimensionMismatch(WStarError):
    pass


class AlgebraMismatch(WStarError):
    pass


class ShapeMismatch(WStarError):
    pass


class NotOrthogonal(WStarError):
    pass


class NotFaithful(WStarError):
    pass


class ProjectionsDontSum(WStarError):
    pass


class CapExceeded(WStarError):
    pass


class GramNotPSD(WStarError):
    """Raised by the fusion oracle; never expected on valid input."""


class NotAdditive(WStarError):
    pass


class InconsistentAction(WStarError):
    pass


class NotHorizontallySelfAdjoint(WStarError):
    pass


class ParseError(WStarError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(WStarError):
    def __init__(self, field, message):
        self.message = message
        super().__init__(f"{field}: {message}")
        self.field = field
