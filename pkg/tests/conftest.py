import logging
from pathlib import Path

import numpy as np
import pytest
from pytest import FixtureRequest

from nethermind.labelprop.episodes import gen_synthetic
from nethermind.labelprop.training import TrainConfig
from nethermind.labelprop.types import SyntheticKind


@pytest.fixture(name="blobs_dataset")
def fixture_blobs_dataset():
    def _blobs_dataset(classes: int = 10, per_class: int = 30, dim: int = 2, noise: float = 0.1, seed: int = 0):
        return gen_synthetic(SyntheticKind.gaussian_blobs, classes, per_class, dim, noise, seed)

    return _blobs_dataset


@pytest.fixture(name="rings_dataset")
def fixture_rings_dataset():
    def _rings_dataset(classes: int = 10, per_class: int = 40, noise: float = 0.05, seed: int = 0):
        return gen_synthetic(SyntheticKind.concentric_rings, classes, per_class, 2, noise, seed)

    return _rings_dataset


@pytest.fixture(name="tiny_config")
def fixture_tiny_config():
    def _tiny_config(**overrides) -> TrainConfig:
        values = {
            "n_way": 3,
            "k_train": 2,
            "k_test": 1,
            "query": 3,
            "k_graph": 5,
            "embed_dim": 4,
            "hidden_dim": 8,
            "max_episodes": 6,
            "checkpoint_every": 2,
            "seed": 7,
        }
        values.update(overrides)
        return TrainConfig.from_mapping(values)

    return _tiny_config


@pytest.fixture(name="chain_graph")
def fixture_chain_graph():
    """Normalized 3-node chain, W = [[0,1,0],[1,0,1],[0,1,0]]"""
    w = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    inv_sqrt = 1.0 / np.sqrt(w.sum(axis=1))
    return w * inv_sqrt[:, None] * inv_sqrt[None, :]


@pytest.fixture(scope="function")
def debug_logger(request: FixtureRequest):
    log_filename = request.module.__name__.replace("tests.", "") + "." + request.function.__name__

    parent_dir = Path(__file__).parent
    log_dir = parent_dir / "logs"
    log_dir.mkdir(exist_ok=True)
    log_file = log_dir / f"{log_filename}.log"

    formatter = logging.Formatter(
        "%(levelname)-8s | %(name)-36s | %(asctime)-15s | %(message)s \t\t (%(filename)s --> %(funcName)s)"
    )

    file_handler = logging.FileHandler(log_file)
    file_handler.setFormatter(formatter)

    logger = logging.getLogger("nethermind")
    logger.addHandler(file_handler)
    logger.setLevel(logging.DEBUG)

    logger.info("-" * 100)
    logger.info(f"\t\tInitializing New Run for Test: {request.function.__name__}")
    logger.info("-" * 100)

    return logger
