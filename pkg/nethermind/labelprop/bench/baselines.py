"""
Non-learned comparison methods.  Both work in the embedding space of a trained checkpoint when one is given,
otherwise directly on the raw (flattened) examples.
"""
import logging
import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from nethermind.labelprop.episodes import Dataset
from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.graph import DEFAULT_K, build_graph
from nethermind.labelprop.model import PropagationNetwork
from nethermind.labelprop.propagation import DEFAULT_ALPHA, build_label_matrix, propagate_closed
from nethermind.labelprop.tensor import Tensor, no_grad
from nethermind.labelprop.training.checkpoint import Checkpoint
from nethermind.labelprop.types import BaselineKind

from .evaluate import DEFAULT_EPISODES, DEFAULT_QUERY, Advance, EpisodeSpec, check_compatible, run_episodes
from .reports import EvalReport

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("bench").getChild("baselines")


def median_sigma(features: np.ndarray) -> float:
    """Median pairwise euclidean distance between rows, or 1.0 when every row coincides"""
    median = float(np.median(pdist(features.reshape(features.shape[0], -1))))
    return median if median > 0.0 else 1.0


def embed_rows(model: PropagationNetwork | None, batch: np.ndarray) -> np.ndarray:
    """Flattened embedding of a batch, or the flattened raw batch without a model"""
    if model is None:
        return batch.reshape(batch.shape[0], -1)
    with no_grad():
        features = model.features(batch).data
    return features.reshape(features.shape[0], -1)


def fixed_sigma_propagation(
    features: np.ndarray, support_labels: np.ndarray, n_way: int, sigma: float, k_graph: int, alpha: float
) -> np.ndarray:
    """Label propagation with one shared length-scale.  Returns predictions for every row"""
    n = features.shape[0]
    with no_grad():
        graph = build_graph(Tensor(features), Tensor(np.full(n, sigma)), k_graph)
        labels = build_label_matrix(support_labels, n_way, n)
        return propagate_closed(graph.S_norm, labels, alpha).preds


def prototype_predictions(
    support: np.ndarray, support_labels: np.ndarray, n_way: int, queries: np.ndarray
) -> np.ndarray:
    """Nearest class mean by squared euclidean distance.  Ties go to the lowest class"""
    prototypes = np.stack([support[support_labels == label].mean(axis=0) for label in range(n_way)])
    dists = ((queries[:, None, :] - prototypes[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(dists, axis=1)


@dataclass
class BaselineEpisodeTask:
    """Query accuracy of a baseline on one episode"""

    kind: BaselineKind
    spec: EpisodeSpec
    model: PropagationNetwork | None
    sigma: float | None
    k_graph: int
    alpha: float

    def __call__(self, index: int) -> float:
        episode = self.spec.episode(index)
        features = embed_rows(self.model, episode.batch())
        n_support = episode.support.shape[0]

        match self.kind:
            case BaselineKind.fixed_sigma_lp:
                sigma = self.sigma if self.sigma is not None else median_sigma(features)
                logger.debug(f"Episode {index}: fixed sigma {sigma:.6g}")
                preds = fixed_sigma_propagation(
                    features, episode.support_labels, episode.n_way, sigma, self.k_graph, self.alpha
                )[n_support:]
            case BaselineKind.prototype:
                preds = prototype_predictions(
                    features[:n_support], episode.support_labels, episode.n_way, features[n_support:]
                )
            case _:
                raise ValueError(f"Unknown baseline {self.kind}")

        return float(np.mean(preds == episode.query_labels))


def eval_baseline(  # pylint: disable=too-many-arguments
    kind: BaselineKind,
    dataset: Dataset,
    n_way: int,
    k_shot: int,
    query: int = DEFAULT_QUERY,
    episodes: int = DEFAULT_EPISODES,
    seed: int = 0,
    checkpoint: Checkpoint | None = None,
    sigma: float | None = None,
    k_graph: int | None = None,
    alpha: float | None = None,
    workers: int = 1,
    advance: Advance | None = None,
) -> EvalReport:
    """
    Evaluates a baseline on the same episodes :func:`~nethermind.labelprop.bench.evaluate.evaluate` would draw
    for the same seed.

    :param sigma: fixed length-scale for fixed_sigma_lp.  Defaults to the median pairwise distance of each
        episode
    :param k_graph: neighbour count (defaults to the checkpoint's, or 20)
    :param alpha: propagation weight (defaults to the checkpoint's, or 0.99)
    """
    model = None
    if checkpoint is not None:
        check_compatible(checkpoint, dataset)
        model = checkpoint.to_model()
        if k_graph is None:
            k_graph = checkpoint.config.k_graph
        if alpha is None:
            alpha = checkpoint.config.alpha
    k_graph = DEFAULT_K if k_graph is None else k_graph
    alpha = DEFAULT_ALPHA if alpha is None else alpha
    if k_graph < 1 or not 0.0 < alpha < 1.0:
        raise ConfigError(f"Baseline needs k_graph >= 1 and alpha in (0, 1), received k_graph {k_graph}, alpha {alpha}")

    dataset.check_capacity(n_way, k_shot + query)
    spec = EpisodeSpec(dataset, n_way, k_shot, query, seed)
    task = BaselineEpisodeTask(kind, spec, model, sigma, k_graph, alpha)
    if kind == BaselineKind.fixed_sigma_lp:
        source = "median pairwise distance per episode" if sigma is None else "fixed by caller"
        logger.info(f"Fixed-sigma label propagation: sigma {sigma if sigma is not None else '(median)'} ({source})")

    start = time.perf_counter()
    accuracies = run_episodes(task, episodes, workers, advance)
    report = EvalReport(
        tag=kind.value,
        n_way=n_way,
        k_shot=k_shot,
        query=query,
        accuracies=accuracies,
        seconds=time.perf_counter() - start,
    )
    logger.info(f"{kind.pretty()}: {report.mean_acc:.4f} +- {report.ci95:.4f} over {episodes} episodes")
    return report
