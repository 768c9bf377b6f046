import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.tensor import Tensor, ops

from .labels import LabelMatrix

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("propagation")

DEFAULT_ALPHA = 0.99


@dataclass(slots=True)
class PropagationResult:
    """Propagated scores with row-wise class probabilities and predictions (ties go to the lowest class)"""

    F_star: Tensor  # pylint: disable=invalid-name
    probs: np.ndarray
    preds: np.ndarray
    alpha: float


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), received {alpha}")


def to_result(scores: Tensor, alpha: float) -> PropagationResult:
    """Derives softmax probabilities and argmax predictions from a score matrix"""
    return PropagationResult(
        F_star=scores,
        probs=softmax(scores.data, axis=1),
        preds=np.argmax(scores.data, axis=1),
        alpha=alpha,
    )


def propagate_closed(S_norm: Tensor, labels: LabelMatrix, alpha: float = DEFAULT_ALPHA) -> PropagationResult:
    """
    F* = (I - alpha S)^-1 Y, solved with the differentiable LU solve.  The (1 - alpha) factor of the iterative
    limit is not applied.
    """
    _check_alpha(alpha)
    n = S_norm.shape[0]
    if labels.n != n:
        raise ConfigError(f"Label matrix has {labels.n} rows, graph has {n} nodes")
    system = Tensor(np.eye(n)) - S_norm * alpha
    return to_result(ops.linsolve(system, labels.Y), alpha)


def propagate_iterative(
    S_norm: Tensor, labels: LabelMatrix, alpha: float = DEFAULT_ALPHA, t_max: int = 10
) -> PropagationResult:
    """F_{t+1} = alpha S F_t + (1 - alpha) Y from F_0 = Y, returning F_{t_max}"""
    _check_alpha(alpha)
    if t_max < 1:
        raise ConfigError(f"t_max must be at least 1, received {t_max}")

    scores = labels.Y
    anchor = labels.Y * (1.0 - alpha)
    for _ in range(t_max):
        scores = ops.matmul(S_norm, scores) * alpha + anchor
    return to_result(scores, alpha)
