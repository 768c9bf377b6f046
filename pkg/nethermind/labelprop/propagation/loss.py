import numpy as np

from nethermind.labelprop.exceptions import LabelError
from nethermind.labelprop.tensor import Tensor, ops
from nethermind.labelprop.types import LossScope

from .labels import LabelMatrix
from .solvers import PropagationResult


def loss_mask(labels: LabelMatrix, scope: LossScope) -> np.ndarray:
    """Rows contributing to the loss: every row for union, non-support rows for query_only"""
    match scope:
        case LossScope.union:
            return np.ones(labels.n, dtype=bool)
        case LossScope.query_only:
            return ~labels.support_mask
        case _:
            raise LabelError(f"Unknown loss scope {scope}")


def episode_loss(result: PropagationResult, labels: LabelMatrix, scope: LossScope = LossScope.union) -> Tensor:
    """
    Summed softmax cross-entropy of the propagated scores against ground truth over the rows in scope

    :raises LabelError: when a row in scope has no ground-truth label
    """
    mask = loss_mask(labels, scope)
    missing = mask & (labels.true_labels < 0)
    if missing.any():
        raise LabelError(f"{int(missing.sum())} rows in the '{scope.value}' loss scope have no ground-truth label")
    return ops.row_softmax_ce(result.F_star, labels.true_labels, mask)


def accuracy(result: PropagationResult, labels: LabelMatrix, rows: np.ndarray | None = None) -> float:
    """Fraction of correct predictions over rows (defaults to the non-support rows)"""
    rows = ~labels.support_mask if rows is None else rows
    if not rows.any():
        return 0.0
    return float(np.mean(result.preds[rows] == labels.true_labels[rows]))
