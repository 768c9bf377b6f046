import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from nethermind.labelprop.episodes import Dataset, sample_episode, stream_rng
from nethermind.labelprop.episodes.sampler import Episode
from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.model import PropagationNetwork
from nethermind.labelprop.propagation import accuracy, build_label_matrix, corrupt_labels
from nethermind.labelprop.training.checkpoint import Checkpoint
from nethermind.labelprop.types import LabelInit, PropagationMode, RngStream

from .reports import EvalReport

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("bench").getChild("evaluate")

DEFAULT_EPISODES = 600
DEFAULT_QUERY = 15

Advance = Callable[[int], None]


class EpisodeTask(Protocol):
    """Picklable callable scoring one evaluation episode by index"""

    def __call__(self, index: int) -> float:
        ...


@dataclass
class LabelNoise:
    """
    Label corruption applied before propagation.  ``init`` fills the non-support rows of Y, ``incorrect`` moves
    that many support labels per episode to a wrong class.
    """

    init: LabelInit = LabelInit.zeros
    incorrect: int = 0

    @property
    def active(self) -> bool:
        return self.init != LabelInit.zeros or self.incorrect > 0


@dataclass
class EpisodeSpec:
    """Shape of the evaluation episodes and the seed of their sampling stream"""

    dataset: Dataset
    n_way: int
    k_shot: int
    query: int
    seed: int

    def episode(self, index: int) -> Episode:
        rng = stream_rng(self.seed, RngStream.sampling, index)
        return sample_episode(self.dataset, self.n_way, self.k_shot, self.query, rng)


@dataclass
class ModelEpisodeTask:
    """Transductive accuracy of a propagation network on the query rows of one episode"""

    model: PropagationNetwork
    spec: EpisodeSpec
    noise: LabelNoise

    def __call__(self, index: int) -> float:
        episode = self.spec.episode(index)
        rng = stream_rng(self.spec.seed, RngStream.label_noise, index)
        support_labels = episode.support_labels
        if self.noise.incorrect:
            support_labels = corrupt_labels(support_labels, episode.n_way, self.noise.incorrect, rng)

        labels = build_label_matrix(
            support_labels, episode.n_way, episode.size, episode.query_labels, init=self.noise.init, rng=rng
        )
        return accuracy(self.model.predict(episode.batch(), labels), labels)


def _run_chunk(task: EpisodeTask, indices: list[int]) -> list[float]:
    return [task(index) for index in indices]


def run_episodes(task: EpisodeTask, episodes: int, workers: int = 1, advance: Advance | None = None) -> np.ndarray:
    """
    Scores episodes 0 .. episodes - 1.  With more than one worker, contiguous chunks of episodes run in a process
    pool on pickled copies of the task.  Results are always returned in episode order, so they do not depend on
    the worker count.
    """
    if episodes < 1:
        raise ConfigError(f"Evaluation needs at least one episode, received {episodes}")

    accuracies: list[float] = []
    if workers <= 1:
        for index in range(episodes):
            accuracies.append(task(index))
            if advance is not None:
                advance(1)
        return np.asarray(accuracies)

    chunk = max(1, math.ceil(episodes / (workers * 4)))
    chunks = [list(range(start, min(start + chunk, episodes))) for start in range(0, episodes, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, task, indices) for indices in chunks]
        for future, indices in zip(futures, chunks):
            accuracies.extend(future.result())
            if advance is not None:
                advance(len(indices))
    return np.asarray(accuracies)


def evaluate_model(  # pylint: disable=too-many-arguments
    model: PropagationNetwork,
    dataset: Dataset,
    n_way: int,
    k_shot: int,
    query: int = DEFAULT_QUERY,
    episodes: int = DEFAULT_EPISODES,
    seed: int = 0,
    tag: str = "tpn",
    workers: int = 1,
    noise: LabelNoise | None = None,
    advance: Advance | None = None,
) -> EvalReport:
    """Query accuracy of a model over evaluation episodes.  Propagation is always solved in closed form"""
    spec = EpisodeSpec(dataset, n_way, k_shot, query, seed)
    dataset.check_capacity(n_way, k_shot + query)
    snapshot = model.clone()
    snapshot.propagation = PropagationMode.closed
    task = ModelEpisodeTask(snapshot, spec, noise or LabelNoise())

    start = time.perf_counter()
    accuracies = run_episodes(task, episodes, workers, advance)
    report = EvalReport(
        tag=tag, n_way=n_way, k_shot=k_shot, query=query, accuracies=accuracies, seconds=time.perf_counter() - start
    )
    logger.info(
        f"{tag}: {n_way}-way {k_shot}-shot, {episodes} episodes -> {report.mean_acc:.4f} +- {report.ci95:.4f} "
        f"in {report.seconds:.1f}s"
    )
    return report


def check_compatible(checkpoint: Checkpoint, dataset: Dataset) -> None:
    """
    :raises ConfigError: when the dataset examples do not match the checkpoint's input shape
    """
    if tuple(checkpoint.in_shape) != tuple(dataset.example_shape):
        raise ConfigError(
            f"Checkpoint expects examples of shape {tuple(checkpoint.in_shape)}, dataset has {dataset.example_shape}"
        )


def evaluate(  # pylint: disable=too-many-arguments
    checkpoint: Checkpoint,
    dataset: Dataset,
    n_way: int,
    k_shot: int,
    query: int = DEFAULT_QUERY,
    episodes: int = DEFAULT_EPISODES,
    seed: int = 0,
    tag: str = "tpn",
    workers: int = 1,
    noise: LabelNoise | None = None,
    advance: Advance | None = None,
) -> EvalReport:
    """Evaluates a trained checkpoint.  Deterministic for a given seed, whatever the worker count"""
    check_compatible(checkpoint, dataset)
    return evaluate_model(
        checkpoint.to_model(), dataset, n_way, k_shot, query, episodes, seed, tag, workers, noise, advance
    )
