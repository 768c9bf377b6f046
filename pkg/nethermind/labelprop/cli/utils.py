import logging
import os
from contextlib import contextmanager
from logging import Logger
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterator

import click

from nethermind.labelprop.types import (
    BaselineKind,
    EmbeddingVariant,
    LabelInit,
    LossScope,
    PropagationMode,
    Split,
    SyntheticKind,
)

if TYPE_CHECKING:
    from nethermind.labelprop.training import TrainConfig

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("cli")


# isort: skip_file
# pylint: disable=too-many-arguments,import-outside-toplevel,too-many-locals


def cli_logger_config(instrument_logger: Logger):
    """Create a rich console & logging handler, attach to the instrument_logger, and return the console"""

    from rich.console import Console
    from rich.logging import RichHandler

    rich_console = Console()
    instrument_logger.handlers.clear()

    instrument_logger.addHandler(RichHandler(show_path=False, console=rich_console))
    instrument_logger.setLevel(logging.INFO)
    return rich_console


def group_options(*options):
    """Decorator to group multiple click options together"""

    def wrapper(function):
        for option in reversed(options):
            function = option(function)
        return function

    return wrapper


def _choice(enum_cls) -> click.Choice:
    return click.Choice([member.value for member in enum_cls])


@contextmanager
def progress_bar(console, description: str, total: int, no_interaction: bool) -> Iterator:
    """Yields an ``advance(n)`` callback driving a rich progress bar"""
    from rich.progress import Progress

    from nethermind.labelprop.training.utils import progress_defaults

    with Progress(*progress_defaults, console=console, disable=no_interaction) as progress:
        task = progress.add_task(description, total=total, status="")
        yield lambda count: progress.update(task, advance=count)


def report_header(command: str, **values: Any) -> dict[str, Any]:
    """Resolved configuration echoed at the top of report files"""
    header = {"command": command}
    header.update({key: value.value if hasattr(value, "value") else value for key, value in values.items()})
    return header


def config_header(config: "TrainConfig") -> dict[str, Any]:
    """TrainConfig fields under a ``config.`` prefix, kept apart from the evaluation keys of a report header"""
    return {f"config.{key}": value for key, value in config.to_dict().items()}


def print_header(console, header: dict[str, Any]) -> None:
    from rich.table import Table

    table = Table(title="Resolved Configuration", min_width=60)
    table.add_column("Key")
    table.add_column("Value", justify="right")
    for key, value in header.items():
        table.add_row(key, str(value))
    console.print(table)


def load_dataset_split(path: str, split: str | None):
    """Loads an FSDS file and returns the requested split view (or the whole dataset when split is None)"""
    from nethermind.labelprop.episodes import load_fsds

    dataset = load_fsds(Path(path))
    return dataset if split is None else dataset.for_split(Split(split))


# -------------------------------------------------------
#    Environment Defaults & Shared Inputs
# -------------------------------------------------------
seed_option = click.option(
    "--seed",
    "seed",
    type=int,
    default=os.environ.get("LABELPROP_SEED"),
    help="Run seed.  If not provided, uses the LABELPROP_SEED environment variable, then the config value (0)",
)
workers_option = click.option(
    "--workers",
    "workers",
    type=int,
    default=os.environ.get("LABELPROP_WORKERS", 1),
    show_default=True,
    help="Evaluation worker processes.  If not provided, uses the LABELPROP_WORKERS environment variable",
)
dataset_option = click.option(
    "--dataset",
    "-d",
    "dataset",
    type=click.Path(dir_okay=False),
    required=True,
    help="FSDS dataset file.  Split tags are read from the <stem>.split manifest next to it",
)
checkpoint_option = click.option(
    "--checkpoint",
    "-c",
    "checkpoint",
    type=click.Path(dir_okay=False),
    required=True,
    help="TPNC checkpoint file",
)
optional_checkpoint_option = click.option(
    "--checkpoint",
    "-c",
    "checkpoint",
    type=click.Path(dir_okay=False),
    default=None,
    help="TPNC checkpoint whose embedding is reused.  Without it, raw inputs are used",
)
config_file_option = click.option(
    "--config",
    "config_file",
    type=click.Path(dir_okay=False),
    default=None,
    help="Line oriented 'key = value' config file.  Command line flags override file values",
)
split_option = click.option(
    "--split",
    "split",
    type=_choice(Split),
    default=Split.test.value,
    show_default=True,
    help="Dataset split to draw episodes from",
)
no_interaction_option = click.option(
    "--no-interaction",
    is_flag=True,
    default=False,
    help="If provided, runs without the progress bar",
)

# -------------------------------------------------------
#    Episode Shape
# -------------------------------------------------------
n_way_option = click.option("--n-way", "n_way", type=int, default=None, help="Classes per episode")
k_shot_option = click.option("--k-shot", "k_shot", type=int, default=None, help="Support examples per class")
query_option = click.option("--query", "query", type=int, default=None, help="Query examples per class")
episodes_option = click.option(
    "--episodes",
    "-e",
    "episodes",
    type=int,
    default=600,
    show_default=True,
    help="Number of evaluation episodes",
)

# -------------------------------------------------------
#    Training Configuration Overrides
# -------------------------------------------------------
training_options = group_options(
    click.option("--n-way", "n_way", type=int, default=None, help="Evaluation way (default 5)"),
    click.option("--n-way-train", "n_way_train", type=int, default=None, help="Training way (defaults to --n-way)"),
    click.option("--k-train", "k_train", type=int, default=None, help="Training shot (default 5)"),
    click.option("--k-test", "k_test", type=int, default=None, help="Evaluation shot (default 1)"),
    click.option("--query", "query", type=int, default=None, help="Evaluation queries per class (default 15)"),
    click.option("--train-query", "train_query", type=int, default=None, help="Training queries per class"),
    click.option("--alpha", "alpha", type=float, default=None, help="Propagation weight in (0, 1) (default 0.99)"),
    click.option("--k-graph", "k_graph", type=int, default=None, help="Neighbours kept per row (default 20)"),
    click.option("--lr0", "lr0", type=float, default=None, help="Initial learning rate (default 1e-3)"),
    click.option("--halve-every", "halve_every", type=int, default=None, help="Episodes between lr halvings"),
    click.option("--max-episodes", "max_episodes", type=int, default=None, help="Training episodes"),
    click.option("--loss-scope", "loss_scope", type=_choice(LossScope), default=None, help="Rows in the loss"),
    click.option("--embedding", "embedding", type=_choice(EmbeddingVariant), default=None, help="Embedding network"),
    click.option("--embed-dim", "embed_dim", type=int, default=None, help="MLP embedding width (default 16)"),
    click.option("--hidden-dim", "hidden_dim", type=int, default=None, help="MLP hidden width (default 64)"),
    click.option("--propagation", "propagation", type=_choice(PropagationMode), default=None, help="Solver"),
    click.option("--iter-steps", "iter_steps", type=int, default=None, help="Steps of iterative propagation"),
    click.option("--checkpoint-every", "checkpoint_every", type=int, default=None, help="Checkpoint cadence"),
    click.option("--val-every", "val_every", type=int, default=None, help="Validation cadence (0 disables)"),
    click.option("--val-episodes", "val_episodes", type=int, default=None, help="Validation episodes"),
)

# -------------------------------------------------------
#    Evaluation Options
# -------------------------------------------------------
output_option = click.option(
    "--output",
    "-o",
    "output",
    type=click.Path(dir_okay=False, writable=True),
    default=None,
    help="CSV report file",
)
timing_option = click.option(
    "--timing",
    is_flag=True,
    default=False,
    help="Fill the seconds column of reports.  Without it the column is left empty so reports are reproducible",
)
label_init_option = click.option(
    "--label-init",
    "label_init",
    type=_choice(LabelInit),
    default=LabelInit.zeros.value,
    show_default=True,
    help="Initial label values of the non-support rows",
)
incorrect_labels_option = click.option(
    "--incorrect-labels",
    "incorrect_labels",
    type=int,
    default=0,
    show_default=True,
    help="Support labels moved to a wrong class in every episode",
)
baseline_kind_option = click.option(
    "--kind",
    "kind",
    type=_choice(BaselineKind),
    required=True,
    help="Baseline method",
)
synthetic_kind_option = click.option(
    "--kind",
    "kind",
    type=_choice(SyntheticKind),
    required=True,
    help="Synthetic dataset family",
)
