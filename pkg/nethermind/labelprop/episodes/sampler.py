import logging
from dataclasses import dataclass

import numpy as np

from nethermind.labelprop.exceptions import ConfigError, EpisodeError

from .dataset import Dataset, LabeledPartition

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("episodes").getChild("sampler")


@dataclass(slots=True)
class Episode:
    """
    N-way K-shot task.  Support and query rows are ordered class-major, ie. the K support rows of episode class
    0 come first.  ``support_keys`` / ``query_keys`` hold (dataset class id, example index) pairs.
    """

    support: np.ndarray
    support_labels: np.ndarray
    query: np.ndarray
    query_labels: np.ndarray
    class_map: np.ndarray
    support_keys: np.ndarray
    query_keys: np.ndarray

    @property
    def n_way(self) -> int:
        return int(self.class_map.shape[0])

    @property
    def k_shot(self) -> int:
        return self.support.shape[0] // self.n_way

    @property
    def query_per_class(self) -> int:
        return self.query.shape[0] // self.n_way

    @property
    def size(self) -> int:
        """Number of graph nodes, N*K + T"""
        return self.support.shape[0] + self.query.shape[0]

    def batch(self) -> np.ndarray:
        """Concatenated support and query examples, fed through the embedding in a single pass"""
        return np.concatenate([self.support, self.query], axis=0)

    def labels(self) -> np.ndarray:
        return np.concatenate([self.support_labels, self.query_labels])

    def support_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        mask[: self.support.shape[0]] = True
        return mask


@dataclass(slots=True)
class SemiEpisode:
    """Episode with an extra pool of unlabeled examples.  pool_labels are kept for diagnostics only"""

    episode: Episode
    pool: np.ndarray
    pool_labels: np.ndarray
    pool_keys: np.ndarray
    distractor: bool

    @property
    def pool_size(self) -> int:
        return int(self.pool.shape[0])


def _check_sizes(n_way: int, k_shot: int, query: int) -> None:
    if n_way < 2:
        raise ConfigError(f"n_way must be at least 2, received {n_way}")
    if k_shot < 1 or query < 1:
        raise ConfigError(f"k_shot and query must be positive, received k_shot={k_shot}, query={query}")


def _draw_classes(
    candidates: list[int], n_way: int, rng: np.random.Generator, requirement: str
) -> np.ndarray:
    if len(candidates) < n_way:
        raise EpisodeError(f"Need {n_way} classes {requirement}, but only {len(candidates)} are available")
    return np.asarray(candidates, dtype=np.int64)[rng.choice(len(candidates), size=n_way, replace=False)]


def _assemble(
    ds: Dataset,
    class_ids: np.ndarray,
    picks: list[np.ndarray],
    k_shot: int,
) -> Episode:
    shape = ds.example_shape
    n_way = class_ids.shape[0]
    query = picks[0].shape[0] - k_shot

    support = np.empty((n_way * k_shot, *shape), dtype=np.float64)
    queries = np.empty((n_way * query, *shape), dtype=np.float64)
    support_keys = np.empty((n_way * k_shot, 2), dtype=np.int64)
    query_keys = np.empty((n_way * query, 2), dtype=np.int64)

    for label, (class_id, chosen) in enumerate(zip(class_ids, picks)):
        examples = ds.get_class(int(class_id)).examples
        s_rows = slice(label * k_shot, (label + 1) * k_shot)
        q_rows = slice(label * query, (label + 1) * query)
        support[s_rows] = examples[chosen[:k_shot]]
        queries[q_rows] = examples[chosen[k_shot:]]
        support_keys[s_rows] = np.column_stack([np.full(k_shot, class_id), chosen[:k_shot]])
        query_keys[q_rows] = np.column_stack([np.full(query, class_id), chosen[k_shot:]])

    return Episode(
        support=support,
        support_labels=np.repeat(np.arange(n_way), k_shot),
        query=queries,
        query_labels=np.repeat(np.arange(n_way), query),
        class_map=class_ids,
        support_keys=support_keys,
        query_keys=query_keys,
    )


def sample_episode(ds: Dataset, n_way: int, k_shot: int, query: int, rng: np.random.Generator) -> Episode:
    """
    Samples an N-way K-shot episode.  Classes are chosen uniformly without replacement, then K + query distinct
    examples are chosen uniformly within each class.  Total query count is ``n_way * query``.

    :param ds: dataset (usually a split view)
    :param n_way: classes per episode
    :param k_shot: support examples per class
    :param query: query examples per class
    :param rng: generator for this episode, see :func:`~nethermind.labelprop.episodes.rng.stream_rng`
    :raises EpisodeError: when the dataset cannot supply the episode
    """
    _check_sizes(n_way, k_shot, query)
    per_class = k_shot + query
    eligible = [record.id for record in ds.classes if record.count >= per_class]
    class_ids = _draw_classes(eligible, n_way, rng, f"with at least {per_class} examples")

    picks = [rng.choice(ds.get_class(int(cid)).count, size=per_class, replace=False) for cid in class_ids]
    return _assemble(ds, class_ids, picks, k_shot)


def sample_semi_episode(  # pylint: disable=too-many-arguments,too-many-locals
    ds: Dataset,
    partition: LabeledPartition,
    n_way: int,
    k_shot: int,
    query: int,
    pool_size: int,
    distractor_count: int,
    rng: np.random.Generator,
) -> SemiEpisode:
    """
    Samples an episode whose support and query examples come from the labeled portion of each class, plus an
    unlabeled pool of ``pool_size`` examples drawn from unlabeled portions.

    With ``distractor_count == 0`` the pool is drawn from the episode classes.  Otherwise ``distractor_count``
    extra classes outside the episode are chosen, and the pool is drawn from those classes only.  Pool
    examples are spread evenly over the pool classes, the first classes taking the remainder.

    :raises EpisodeError: when labeled portions are too small, or the pool cannot be filled
    """
    _check_sizes(n_way, k_shot, query)
    if pool_size < 0 or distractor_count < 0:
        raise ConfigError("pool_size and distractor_count must be non-negative")

    per_class = k_shot + query
    eligible = [cid for cid in ds.class_ids if partition.labeled[cid].shape[0] >= per_class]
    class_ids = _draw_classes(eligible, n_way, rng, f"with at least {per_class} labeled examples")

    picks = []
    for cid in class_ids:
        labeled = partition.labeled[int(cid)]
        picks.append(labeled[rng.choice(labeled.shape[0], size=per_class, replace=False)])
    episode = _assemble(ds, class_ids, picks, k_shot)

    if distractor_count:
        remaining = [cid for cid in ds.class_ids if cid not in set(class_ids.tolist())]
        pool_classes = _draw_classes(remaining, distractor_count, rng, "outside the episode for distractors")
    else:
        pool_classes = class_ids

    quota = np.full(pool_classes.shape[0], pool_size // pool_classes.shape[0], dtype=np.int64)
    quota[: pool_size % pool_classes.shape[0]] += 1

    pool, pool_labels, pool_keys = [], [], []
    for position, (cid, take) in enumerate(zip(pool_classes, quota)):
        unlabeled = partition.unlabeled[int(cid)]
        if take > unlabeled.shape[0]:
            raise EpisodeError(
                f"Unlabeled pool exhausted: class {int(cid)} holds {unlabeled.shape[0]} unlabeled examples, "
                f"{int(take)} requested"
            )
        chosen = unlabeled[rng.choice(unlabeled.shape[0], size=int(take), replace=False)]
        pool.append(ds.get_class(int(cid)).examples[chosen])
        # Distractor examples carry label -1, in-episode examples carry their episode label
        pool_labels.append(np.full(int(take), -1 if distractor_count else position, dtype=np.int64))
        pool_keys.append(np.column_stack([np.full(int(take), cid), chosen]))

    return SemiEpisode(
        episode=episode,
        pool=np.concatenate(pool, axis=0) if pool_size else np.empty((0, *ds.example_shape)),
        pool_labels=np.concatenate(pool_labels) if pool_size else np.empty(0, dtype=np.int64),
        pool_keys=np.concatenate(pool_keys, axis=0) if pool_size else np.empty((0, 2), dtype=np.int64),
        distractor=bool(distractor_count),
    )
