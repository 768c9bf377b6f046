"""
Synthetic datasets whose classes lie on low dimensional manifolds.  Examples are rounded to 32-bit precision
at generation time, so a dataset survives an FSDS round trip unchanged.
"""
import logging

import numpy as np

from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.types import RngStream, Split, SyntheticKind

from .dataset import ClassRecord, Dataset
from .rng import stream_rng

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("episodes").getChild("synthetic")

DEFAULT_SPLIT_FRACTIONS = (0.6, 0.2, 0.2)
BLOB_SPREAD = 4.0


def _blobs(classes: int, per_class: int, dim: int, noise: float, rng: np.random.Generator) -> list[np.ndarray]:
    centers = rng.normal(size=(classes, dim)) * BLOB_SPREAD
    return [center + noise * rng.normal(size=(per_class, dim)) for center in centers]


def _rings(classes: int, per_class: int, dim: int, noise: float, rng: np.random.Generator) -> list[np.ndarray]:
    # Ring i has radius 1 + i, every ring is centered on the origin
    out = []
    for index in range(classes):
        angles = rng.uniform(0.0, 2.0 * np.pi, size=per_class)
        points = np.zeros((per_class, dim))
        points[:, 0] = (1.0 + index) * np.cos(angles)
        points[:, 1] = (1.0 + index) * np.sin(angles)
        out.append(points + noise * rng.normal(size=(per_class, dim)))
    return out


def _arcs(classes: int, per_class: int, dim: int, noise: float, rng: np.random.Generator) -> list[np.ndarray]:
    # Interleaved half circles, alternating orientation, shifted one unit apart along the first axis
    out = []
    for index in range(classes):
        angles = rng.uniform(0.0, np.pi, size=per_class)
        flip = -1.0 if index % 2 else 1.0
        points = np.zeros((per_class, dim))
        points[:, 0] = index + np.cos(angles)
        points[:, 1] = flip * (np.sin(angles) - 0.25)
        out.append(points + noise * rng.normal(size=(per_class, dim)))
    return out


def assign_splits(
    classes: int, seed: int, fractions: tuple[float, float, float] = DEFAULT_SPLIT_FRACTIONS
) -> list[Split]:
    """
    Assigns each class to train / val / test.  Split sizes are the rounded fractions of the class count (test
    takes the remainder), and classes are shuffled with the run seed before assignment.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions) or not np.isclose(sum(fractions), 1.0):
        raise ConfigError(f"Split fractions must be three non-negative values summing to 1, received {fractions}")

    n_train = int(round(fractions[0] * classes))
    n_val = min(int(round(fractions[1] * classes)), classes - n_train)
    order = stream_rng(seed, RngStream.splits, 0).permutation(classes)

    splits = [Split.test] * classes
    for position, class_index in enumerate(order):
        if position < n_train:
            splits[class_index] = Split.train
        elif position < n_train + n_val:
            splits[class_index] = Split.val
    return splits


def gen_synthetic(  # pylint: disable=too-many-arguments
    kind: SyntheticKind,
    classes: int,
    per_class: int,
    dim: int,
    noise: float,
    seed: int,
    fractions: tuple[float, float, float] = DEFAULT_SPLIT_FRACTIONS,
) -> Dataset:
    """
    Generates a deterministic synthetic dataset.

    * ``gaussian-blobs``: isotropic clusters around random centers
    * ``concentric-rings``: class i on a circle of radius 1 + i about the origin, so every class mean sits near
      the origin
    * ``noisy-arcs``: interleaved half circles

    Rings and arcs live in the first two coordinates.  Any further coordinates carry only noise.

    :param kind: generator family
    :param classes: number of classes, at least 2
    :param per_class: examples per class, at least 20
    :param dim: example dimension, at least 2
    :param noise: standard deviation of the gaussian noise added to every coordinate
    :param seed: dataset seed
    :param fractions: train / val / test class fractions
    """
    if classes < 2:
        raise ConfigError(f"Synthetic datasets need at least 2 classes, received {classes}")
    if per_class < 20:
        raise ConfigError(f"Synthetic datasets need at least 20 examples per class, received {per_class}")
    if dim < 2:
        raise ConfigError(f"Synthetic datasets need at least 2 dimensions, received {dim}")
    if noise < 0 or not np.isfinite(noise):
        raise ConfigError(f"noise must be a finite non-negative value, received {noise}")

    rng = stream_rng(seed, RngStream.noise, 0)
    match kind:
        case SyntheticKind.gaussian_blobs:
            arrays = _blobs(classes, per_class, dim, noise, rng)
        case SyntheticKind.concentric_rings:
            arrays = _rings(classes, per_class, dim, noise, rng)
        case SyntheticKind.noisy_arcs:
            arrays = _arcs(classes, per_class, dim, noise, rng)
        case _:
            raise ConfigError(f"Unknown synthetic dataset kind {kind}")

    splits = assign_splits(classes, seed, fractions)
    records = [
        ClassRecord(
            id=index,
            name=f"{kind.value}-{index:03d}",
            examples=array.astype(np.float32).astype(np.float64),
            split=splits[index],
        )
        for index, array in enumerate(arrays)
    ]
    logger.info(f"Generated {kind.value} dataset with {classes} classes x {per_class} examples in {dim}-D")
    return Dataset(classes=records, example_shape=(dim,))
