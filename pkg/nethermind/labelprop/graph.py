"""
Episode graph construction: scaled gaussian similarities, k-max row pruning with symmetrization, and the
normalized matrix S = D^-1/2 W D^-1/2.  Every step is differentiable with respect to features and
length-scales.
"""
import logging
from dataclasses import dataclass

import numpy as np

from nethermind.labelprop.exceptions import ConfigError, DimensionError
from nethermind.labelprop.tensor import Tensor, ops

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("graph")

DEFAULT_K = 20
DEGREE_FLOOR = 1e-12


@dataclass(slots=True)
class EpisodeGraph:
    """Graph over the n = N*K + T examples of an episode"""

    W: Tensor  # pylint: disable=invalid-name
    W_k: Tensor  # pylint: disable=invalid-name
    S_norm: Tensor  # pylint: disable=invalid-name
    sigmas: Tensor
    k: int

    @property
    def n(self) -> int:  # pylint: disable=invalid-name
        return self.W.shape[0]


def scaled_distances(features: Tensor, sigmas: Tensor) -> Tensor:
    """
    D_ij = || f_i / sigma_i - f_j / sigma_j ||^2

    :param features: n x d (or n x C x H x W, flattened per example)
    :param sigmas: n strictly positive length-scales
    """
    if features.ndim > 2:
        features = ops.flatten_rows(features)
    if features.ndim != 2 or sigmas.shape != (features.shape[0],):
        raise DimensionError(f"scaled_distances: features {features.shape} and sigmas {sigmas.shape} do not align")
    return ops.pairwise_sq_dists(features / ops.reshape(sigmas, (sigmas.shape[0], 1)))


def similarity(dists: Tensor) -> Tensor:
    """W = exp(-D / 2) with the diagonal set to 0"""
    n = dists.shape[0]
    return ops.exp(dists * -0.5) * (1.0 - np.eye(n))


def knn_mask(W: np.ndarray, k: int) -> np.ndarray:  # pylint: disable=invalid-name
    """
    Boolean mask keeping the k largest off-diagonal entries of every row.  Ties at the k-th value keep the lower
    column index.
    """
    scores = W.copy()
    np.fill_diagonal(scores, -np.inf)
    order = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    mask = np.zeros(W.shape, dtype=bool)
    np.put_along_axis(mask, order, True, axis=1)
    return mask


def knn_prune(W: Tensor, k: int) -> Tensor:  # pylint: disable=invalid-name
    """
    Keeps the k-max entries of each row, then symmetrizes with W_k = max(M, M^T).  The kept mask is a constant
    for differentiation.

    :raises ConfigError: unless 1 <= k <= n - 1
    """
    n = W.shape[0]
    if not 1 <= k <= n - 1:
        raise ConfigError(f"knn_prune: k must lie in [1, {n - 1}] for a {n}-node graph, received {k}")
    return ops.masked_symmetric_max(W, knn_mask(W.data, k))


def normalized_laplacian(W_k: Tensor) -> Tensor:  # pylint: disable=invalid-name
    """S = D^-1/2 W_k D^-1/2, with every degree floored at 1e-12 so isolated nodes map to zero rows"""
    n = W_k.shape[0]
    degrees = ops.clamp_min(ops.sum(W_k, axis=1), DEGREE_FLOOR)
    inv_sqrt = ops.power(degrees, -0.5)
    return W_k * ops.reshape(inv_sqrt, (n, 1)) * ops.reshape(inv_sqrt, (1, n))


def resolve_k(k: int, n: int) -> int:
    """Clamps the neighbour count to n - 1 for small episodes"""
    if k < 1:
        raise ConfigError(f"k_graph must be positive, received {k}")
    return min(k, n - 1)


def build_graph(features: Tensor, sigmas: Tensor, k: int = DEFAULT_K) -> EpisodeGraph:
    """Runs the full graph pipeline over embedded features"""
    n = features.shape[0]
    k = resolve_k(k, n)
    W = similarity(scaled_distances(features, sigmas))  # pylint: disable=invalid-name
    W_k = knn_prune(W, k)  # pylint: disable=invalid-name
    return EpisodeGraph(W=W, W_k=W_k, S_norm=normalized_laplacian(W_k), sigmas=sigmas, k=k)


def spectral_radius(S: np.ndarray, iterations: int = 500, seed: int = 0) -> float:  # pylint: disable=invalid-name
    """Power iteration estimate of the largest absolute eigenvalue of a symmetric matrix"""
    vector = np.random.default_rng(seed).normal(size=S.shape[0])
    estimate = 0.0
    for _ in range(iterations):
        product = S @ vector
        norm = np.linalg.norm(product)
        if norm == 0.0:
            return 0.0
        estimate = float(vector @ product / (vector @ vector))
        vector = product / norm
    return abs(estimate)
