"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the CLI (and
callers) can tell failure kinds apart without string matching.
"""


class AddnetError(Exception):
    code = "error"


class NetworkSyntaxError(AddnetError):
    code = "syntax"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class CycleError(AddnetError):
    code = "cycle"


class RowSumError(AddnetError):
    code = "row-sum"


class WeightSumError(AddnetError):
    code = "weight-sum"


class SubsetUnionError(AddnetError):
    code = "subset-union"


class DanglingReferenceError(AddnetError):
    code = "dangling-reference"


class UnknownVariableError(AddnetError):
    code = "unknown-variable"


class UnknownStateError(AddnetError):
    code = "unknown-state"


class ShapeError(AddnetError):
    code = "shape"


class SizeLimitError(AddnetError):
    code = "size-limit"


class ImpossibleEvidenceError(AddnetError):
    code = "impossible-evidence"


class NonChordalError(AddnetError):
    code = "non-chordal"


class TriangulationError(AddnetError):
    code = "triangulation"


class NotAdditiveError(AddnetError):
    code = "not-additive"


class StructureMismatchError(AddnetError):
    code = "structure-mismatch"


class BoundaryError(AddnetError):
    code = "boundary"


class NonBinaryError(AddnetError):
    code = "non-binary"
