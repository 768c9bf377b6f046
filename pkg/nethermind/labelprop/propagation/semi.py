from typing import TYPE_CHECKING

import numpy as np

from .labels import build_label_matrix

if TYPE_CHECKING:
    from nethermind.labelprop.model import PropagationNetwork


def classify_semi(  # pylint: disable=too-many-arguments
    model: "PropagationNetwork",
    support: np.ndarray,
    support_labels: np.ndarray,
    unlabeled: np.ndarray,
    query_point: np.ndarray,
    n_way: int,
) -> int:
    """
    Classifies a single query by propagating over support u unlabeled u {query}.  The graph is rebuilt for every
    query, so the n = N*K + |U| + 1 node graph never contains other queries.

    :param support: N*K labeled examples
    :param support_labels: their episode labels
    :param unlabeled: pool examples (may be empty)
    :param query_point: one example
    :return: predicted episode label of the query
    """
    batch = np.concatenate([support, unlabeled, query_point[None, ...]], axis=0)
    labels = build_label_matrix(support_labels, n_way, batch.shape[0])
    return int(model.predict(batch, labels).preds[-1])


def classify_semi_queries(  # pylint: disable=too-many-arguments
    model: "PropagationNetwork",
    support: np.ndarray,
    support_labels: np.ndarray,
    unlabeled: np.ndarray,
    queries: np.ndarray,
    n_way: int,
) -> np.ndarray:
    """Runs :func:`classify_semi` for every query independently"""
    return np.array(
        [classify_semi(model, support, support_labels, unlabeled, query, n_way) for query in queries],
        dtype=np.int64,
    )
