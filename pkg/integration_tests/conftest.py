import logging
from pathlib import Path

import pytest
from click.testing import CliRunner
from pytest import FixtureRequest

from nethermind.labelprop.cli import labelprop_cli

from .utils import TINY_TRAINING, printout_error_and_traceback


@pytest.fixture(name="invoke")
def fixture_invoke():
    def _invoke(*args: str, expected_exit: int = 0):
        result = CliRunner().invoke(labelprop_cli, [str(arg) for arg in args])
        if result.exit_code != expected_exit:
            printout_error_and_traceback(result)
        assert result.exit_code == expected_exit
        return result

    return _invoke


@pytest.fixture(name="rings_file", scope="module")
def fixture_rings_file(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "rings.fsds"
    result = CliRunner().invoke(
        labelprop_cli,
        [
            "gen-data",
            "--kind",
            "concentric-rings",
            "--classes",
            "20",
            "--per-class",
            "30",
            "--seed",
            "0",
            "-o",
            str(path),
        ],
    )
    assert result.exit_code == 0, result.output
    return path


@pytest.fixture(name="tiny_checkpoint", scope="module")
def fixture_tiny_checkpoint(tmp_path_factory, rings_file) -> Path:
    path = tmp_path_factory.mktemp("models") / "tiny.tpnc"
    result = CliRunner().invoke(
        labelprop_cli,
        ["train", "--dataset", str(rings_file), "--checkpoint", str(path), "--max-episodes", "4", *TINY_TRAINING],
    )
    assert result.exit_code == 0, result.output
    return path


@pytest.fixture(scope="function")
def create_debug_logger(request: FixtureRequest):
    log_filename = request.module.__name__.replace("integration_tests.", "") + "." + request.function.__name__

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
