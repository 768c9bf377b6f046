import logging
from dataclasses import dataclass, field

import numpy as np

from nethermind.labelprop.exceptions import ConfigError, EpisodeError, FormatError
from nethermind.labelprop.types import RngStream, Split

from .rng import stream_rng

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("episodes").getChild("dataset")


@dataclass(slots=True)
class ClassRecord:
    """Single class of a dataset.  examples has shape (count, *example_shape)"""

    id: int  # pylint: disable=invalid-name
    name: str
    examples: np.ndarray
    split: Split | None = None

    @property
    def count(self) -> int:
        return int(self.examples.shape[0])


@dataclass
class Dataset:
    """
    Immutable collection of classes sharing a single example shape.  Classes carry their split tag, and
    :meth:`for_split` returns the view used for training, validation or testing.  Class ids are positions in
    the full dataset and are preserved by split views.
    """

    classes: list[ClassRecord]
    example_shape: tuple[int, ...]
    split: Split | None = None
    _by_id: dict[int, ClassRecord] = field(init=False, repr=False)

    def __post_init__(self):
        names = set()
        for record in self.classes:
            if tuple(record.examples.shape[1:]) != self.example_shape:
                raise FormatError(
                    f"Class '{record.name}' has example shape {tuple(record.examples.shape[1:])}, "
                    f"expected {self.example_shape}"
                )
            if record.name in names:
                raise FormatError(f"Duplicate class name '{record.name}'")
            names.add(record.name)
        self._by_id = {record.id: record for record in self.classes}

    def __len__(self) -> int:
        return len(self.classes)

    @property
    def class_ids(self) -> list[int]:
        return [record.id for record in self.classes]

    @property
    def num_examples(self) -> int:
        return sum(record.count for record in self.classes)

    def get_class(self, class_id: int) -> ClassRecord:
        """Returns the class record for a dataset class id"""
        try:
            return self._by_id[class_id]
        except KeyError:
            raise EpisodeError(f"Class id {class_id} is not part of this dataset")

    def has_split_tags(self) -> bool:
        return any(record.split is not None for record in self.classes)

    def for_split(self, split: Split) -> "Dataset":
        """
        Returns the classes tagged with split.  Datasets without any split tags are returned whole, so
        untagged files can still be evaluated.
        """
        if not self.has_split_tags():
            logger.warning(
                f"Dataset has no split manifest... Using all {len(self.classes)} classes for '{split.value}'"
            )
            return Dataset(classes=list(self.classes), example_shape=self.example_shape, split=split)

        selected = [record for record in self.classes if record.split == split]
        if not selected:
            raise EpisodeError(f"Dataset contains no classes in the '{split.value}' split")
        return Dataset(classes=selected, example_shape=self.example_shape, split=split)

    def check_capacity(self, n_way: int, per_class: int) -> None:
        """
        Verifies that at least n_way classes hold per_class examples each

        :raises EpisodeError: when too few classes qualify
        """
        eligible = [record for record in self.classes if record.count >= per_class]
        if len(eligible) < n_way:
            raise EpisodeError(
                f"Episodes need {n_way} classes with at least {per_class} examples, but only {len(eligible)} of "
                f"{len(self.classes)} classes qualify"
            )


@dataclass(slots=True)
class LabeledPartition:
    """Fixed per-class split of example indices into a labeled portion and an unlabeled portion"""

    ratio: float
    labeled: dict[int, np.ndarray]
    unlabeled: dict[int, np.ndarray]


def partition_labeled(ds: Dataset, ratio: float, seed: int, split_index: int = 0) -> LabeledPartition:
    """
    Splits every class into labeled and unlabeled examples.  The labeled share of a class with ``count``
    examples is ``round(ratio * count)``.  The partition depends only on (seed, split_index, class id), so it
    is stable for the whole run.

    :param ds: dataset to partition
    :param ratio: labeled fraction in (0, 1]
    :param seed: run seed
    :param split_index: selects one of several independent partitions for the same seed
    """
    if not 0.0 < ratio <= 1.0:
        raise ConfigError(f"labeled_ratio must lie in (0, 1], received {ratio}")

    labeled, unlabeled = {}, {}
    for record in ds.classes:
        order = stream_rng(seed, RngStream.partition, (split_index, record.id)).permutation(record.count)
        cut = int(round(ratio * record.count))
        labeled[record.id] = np.sort(order[:cut])
        unlabeled[record.id] = np.sort(order[cut:])

    return LabeledPartition(ratio=ratio, labeled=labeled, unlabeled=unlabeled)
