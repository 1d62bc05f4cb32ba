"""Exception hierarchy for QuaterGCN.

Library code raises these; only the CLI translates them into exit codes.
"""

from typing import Optional

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2
EXIT_DATA = 3


class QuaterGCNError(Exception):
    """Base class for every error raised by the package."""

    exit_code = EXIT_DATA


class ShapeError(QuaterGCNError):
    """Operands do not conform (matrix product, non-square input, head widths)."""


class NotHermitianError(QuaterGCNError):
    """A matrix expected to be Hermitian is not, beyond the tolerance."""

    def __init__(self, message: str, index: Optional[tuple] = None, deviation: float = 0.0):
        super().__init__(message)
        self.index = index
        self.deviation = deviation


class GraphFormatError(QuaterGCNError):
    """Malformed edge list, label file or matrix file."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class InvalidConfigError(QuaterGCNError):
    """Configuration values violate an invariant."""

    exit_code = EXIT_USAGE


class IsolatedNodeError(QuaterGCNError):
    """Normalization requested on a graph with a zero-degree node."""

    def __init__(self, node: int):
        super().__init__(f"node {node} has zero degree; the normalized Laplacian is undefined")
        self.node = node


class DataFileError(QuaterGCNError):
    """A graph or label file named by an experiment does not exist."""

    def __init__(self, kind: str, path: object):
        super().__init__(f"{kind} file not found: {path}")
        self.path = path


class SplitError(QuaterGCNError):
    """A node or edge split cannot satisfy its constraints."""


class DivergenceError(QuaterGCNError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class CheckpointError(QuaterGCNError):
    """A checkpoint file is malformed or does not match the model."""


class PropertyError(QuaterGCNError):
    """Unknown verifier property name."""

    exit_code = EXIT_USAGE
