from dataclasses import dataclass

import numpy as np

from nethermind.labelprop.exceptions import LabelError
from nethermind.labelprop.tensor import Tensor
from nethermind.labelprop.types import LabelInit

UNKNOWN_LABEL = -1


@dataclass(slots=True)
class LabelMatrix:
    """
    Label matrix Y (n x N) with one-hot support rows.  ``true_labels`` holds the ground truth of every row, or
    -1 where it is unknown (unlabeled pools, test-time queries).
    """

    Y: Tensor  # pylint: disable=invalid-name
    support_mask: np.ndarray
    true_labels: np.ndarray

    @property
    def n_way(self) -> int:
        return self.Y.shape[1]

    @property
    def n(self) -> int:  # pylint: disable=invalid-name
        return self.Y.shape[0]


def build_label_matrix(
    support_labels: np.ndarray,
    n_way: int,
    n: int,  # pylint: disable=invalid-name
    other_labels: np.ndarray | None = None,
    init: LabelInit = LabelInit.zeros,
    rng: np.random.Generator | None = None,
) -> LabelMatrix:
    """
    Builds the label matrix for a graph whose first rows are the support set.

    :param support_labels: episode labels of the support rows, in [0, n_way)
    :param n_way: number of classes
    :param n: total rows, support rows first
    :param other_labels: ground truth of the remaining rows (-1 when unknown).  Defaults to all unknown
    :param init: initial values of the non-support rows.  ``zeros`` yields the standard one-hot / zero matrix,
        ``uniform`` and ``normal`` fill them with noise drawn from rng
    :param rng: generator for noisy initializations
    """
    support_labels = np.asarray(support_labels, dtype=np.int64)
    n_support = support_labels.shape[0]
    if n_support > n:
        raise LabelError(f"{n_support} support labels exceed the {n} graph rows")
    if n_support and (support_labels.min() < 0 or support_labels.max() >= n_way):
        raise LabelError(f"Support labels must lie in [0, {n_way})")

    if other_labels is None:
        other_labels = np.full(n - n_support, UNKNOWN_LABEL, dtype=np.int64)
    other_labels = np.asarray(other_labels, dtype=np.int64)
    if other_labels.shape != (n - n_support,):
        raise LabelError(f"Expected {n - n_support} non-support labels, received {other_labels.shape}")

    Y = np.zeros((n, n_way))  # pylint: disable=invalid-name
    Y[np.arange(n_support), support_labels] = 1.0
    match init:
        case LabelInit.zeros:
            pass
        case LabelInit.uniform:
            Y[n_support:] = _require(rng).uniform(0.0, 1.0, size=(n - n_support, n_way))
        case LabelInit.normal:
            Y[n_support:] = _require(rng).normal(0.0, 1.0, size=(n - n_support, n_way))

    support_mask = np.zeros(n, dtype=bool)
    support_mask[:n_support] = True
    true_labels = np.concatenate([support_labels, other_labels])
    return LabelMatrix(Y=Tensor(Y), support_mask=support_mask, true_labels=true_labels)


def _require(rng: np.random.Generator | None) -> np.random.Generator:
    if rng is None:
        raise LabelError("Noisy label initialization requires a random generator")
    return rng


def corrupt_labels(labels: np.ndarray, n_way: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Returns a copy of labels with ``count`` randomly chosen entries moved to a different, random class

    :raises LabelError: if count exceeds the number of labels
    """
    labels = np.array(labels, dtype=np.int64)
    if count < 0 or count > labels.shape[0]:
        raise LabelError(f"Cannot corrupt {count} of {labels.shape[0]} labels")
    for index in rng.choice(labels.shape[0], size=count, replace=False):
        labels[index] = (labels[index] + rng.integers(1, n_way)) % n_way
    return labels
