"""Exception hierarchy. Each class carries the stable error ``code`` used in reports."""


class LabError(Exception):
    code = "LAB_ERROR"

    def __init__(self, message="", **details):
        super().__init__(message or self.code)
        self.details = details


class OutOfDomainError(LabError, ValueError):
    code = "OUT_OF_DOMAIN"


class UnsupportedCurveError(LabError, ValueError):
    code = "UNSUPPORTED_CURVE"


class NotDivisibleError(LabError, ValueError):
    code = "NOT_DIVISIBLE"


class DimMismatchError(LabError, ValueError):
    code = "DIM_MISMATCH"


class IndexOutOfRangeError(LabError, IndexError):
    code = "INDEX_OUT_OF_RANGE"


class GridTooCoarseError(LabError, ValueError):
    code = "GRID_TOO_COARSE"


class BoundaryMismatchError(LabError, ValueError):
    code = "BOUNDARY_MISMATCH"


class OutOfOmegaError(LabError, ValueError):
    code = "OUT_OF_OMEGA"


class EmptySamplesError(LabError, ValueError):
    code = "EMPTY_SAMPLES"


class NonfiniteStateError(LabError, FloatingPointError):
    code = "NONFINITE_STATE"


class UnknownFormError(LabError, ValueError):
    code = "UNKNOWN_FORM"


class NotDiagonalizableError(LabError, ValueError):
    code = "NOT_DIAGONALIZABLE"


class LambdaInSpectrumError(LabError, ValueError):
    code = "LAMBDA_IN_SPECTRUM"


class MissingComponentError(LabError, KeyError):
    code = "MISSING_COMPONENT"

    def __str__(self):
        return Exception.__str__(self)


class LengthMismatchError(LabError, ValueError):
    code = "LENGTH_MISMATCH"


class ConfigInvalidError(LabError, ValueError):
    code = "CONFIG_INVALID"
