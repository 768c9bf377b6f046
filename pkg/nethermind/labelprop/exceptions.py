from typing import Any


class DimensionError(Exception):
    """

    Raised when tensor shapes or ranks are incompatible with an operation.  The message names every
    offending shape, ie. ``matmul: (2, 3) @ (4, 2)``.

    """


class SingularMatrixError(Exception):
    """
    Raised by :func:`~nethermind.labelprop.tensor.ops.linsolve` when LU factorization produces a pivot smaller
    than the singularity threshold.  The index of the offending pivot is stored on ``pivot_index``.

    For label propagation this only happens when ``alpha`` is at or above 1, or when the graph contains
    non-finite similarities.
    """

    def __init__(self, message: str, pivot_index: int):
        super().__init__(message)
        self.pivot_index = pivot_index


class TapeError(Exception):
    """
    Raised when the differentiation tape is misused:

        * calling backward() on a non-scalar tensor
        * calling backward() twice on the same forward pass
        * calling backward() on a tensor that was produced outside of any tape
    """


class LabelError(Exception):
    """Raised when a label matrix, label vector or loss mask is inconsistent with the class count"""


class EpisodeError(Exception):
    """

    Raised when an episode cannot be sampled from a dataset, ie. the dataset has fewer classes than the
    requested way, a class has fewer examples than shots + queries, or an unlabeled pool is exhausted.

    """


class FormatError(Exception):
    """
    Raised when a dataset (FSDS) or checkpoint (TPNC) file cannot be decoded.  The byte offset where
    decoding failed is stored on ``offset``.

    Troubleshooting steps:

    * Verify the file was written by the same format version
    * Check that the file was not truncated during copy
    * Regenerate synthetic datasets with ``labelprop gen-data``
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (at byte offset {offset})")
        self.offset = offset


class ConfigError(Exception):
    """Raised when configuration values are out of range, unknown keys are present, or params are invalid"""


class NumericalError(Exception):
    """
    Raised when training produces a non-finite loss.  The ``diagnostics`` dictionary carries the episode
    seed, the range of length-scales and the condition estimate of (I - alpha * S) for the failing episode.
    """

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
