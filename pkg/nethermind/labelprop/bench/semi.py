import logging
import time
from dataclasses import dataclass

import numpy as np

from nethermind.labelprop.episodes import Dataset, LabeledPartition, partition_labeled, sample_semi_episode, stream_rng
from nethermind.labelprop.model import PropagationNetwork
from nethermind.labelprop.propagation import classify_semi_queries
from nethermind.labelprop.training.checkpoint import Checkpoint
from nethermind.labelprop.types import PropagationMode, RngStream

from .evaluate import DEFAULT_EPISODES, DEFAULT_QUERY, Advance, check_compatible, run_episodes
from .reports import EvalReport, standard_error

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("bench").getChild("semi")

DEFAULT_SPLITS = 10
DEFAULT_LABELED_RATIO = 0.4


@dataclass
class SemiEpisodeTask:  # pylint: disable=too-many-instance-attributes
    """Per-query semi-supervised accuracy on one episode of one labeled/unlabeled split"""

    model: PropagationNetwork
    dataset: Dataset
    partition: LabeledPartition
    split_index: int
    n_way: int
    k_shot: int
    query: int
    pool_size: int
    distractors: int
    seed: int

    def __call__(self, index: int) -> float:
        rng = stream_rng(self.seed, RngStream.sampling, (self.split_index, index))
        semi = sample_semi_episode(
            self.dataset,
            self.partition,
            self.n_way,
            self.k_shot,
            self.query,
            self.pool_size,
            self.distractors,
            rng,
        )
        episode = semi.episode
        preds = classify_semi_queries(
            self.model, episode.support, episode.support_labels, semi.pool, episode.query, episode.n_way
        )
        return float(np.mean(preds == episode.query_labels))


def semi_eval(  # pylint: disable=too-many-arguments,too-many-locals
    checkpoint: Checkpoint,
    dataset: Dataset,
    n_way: int,
    k_shot: int,
    query: int = DEFAULT_QUERY,
    labeled_ratio: float = DEFAULT_LABELED_RATIO,
    pool_size: int = 0,
    distractors: int = 0,
    episodes: int = DEFAULT_EPISODES,
    seed: int = 0,
    splits: int = DEFAULT_SPLITS,
    workers: int = 1,
    advance: Advance | None = None,
) -> EvalReport:
    """
    Semi-supervised evaluation.  For each of ``splits`` labeled/unlabeled partitions, ``episodes`` episodes are
    drawn, and every query is classified on its own graph over support, unlabeled pool and that query.

    The report holds the per-episode accuracies of every split (``splits * episodes`` values, from which ci95
    is computed), and ``stderr`` is the standard error of the per-split means.

    :param labeled_ratio: labeled share of each class
    :param pool_size: unlabeled examples per episode (M)
    :param distractors: number of distractor classes supplying the pool (0 draws from the episode classes)
    """
    check_compatible(checkpoint, dataset)
    model = checkpoint.to_model()
    model.propagation = PropagationMode.closed

    start = time.perf_counter()
    split_means, accuracies = [], []
    for split_index in range(splits):
        partition = partition_labeled(dataset, labeled_ratio, seed, split_index)
        task = SemiEpisodeTask(
            model, dataset, partition, split_index, n_way, k_shot, query, pool_size, distractors, seed
        )
        split_accs = run_episodes(task, episodes, workers, advance)
        split_means.append(float(split_accs.mean()))
        accuracies.append(split_accs)
        logger.debug(f"Split {split_index}: {split_means[-1]:.4f}")

    tag = f"tpn-semi-m{pool_size}" + (f"-d{distractors}" if distractors else "")
    report = EvalReport(
        tag=tag,
        n_way=n_way,
        k_shot=k_shot,
        query=query,
        accuracies=np.concatenate(accuracies),
        seconds=time.perf_counter() - start,
        stderr=standard_error(np.asarray(split_means)),
        extras={"labeled_ratio": labeled_ratio, "splits": splits},
    )
    logger.info(
        f"{tag}: {report.mean_acc:.4f} +- {report.ci95:.4f} (stderr {report.stderr:.4f}) over {splits} splits"
    )
    return report
