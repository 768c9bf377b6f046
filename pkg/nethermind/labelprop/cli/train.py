import logging

import click

from nethermind.labelprop.cli.utils import (
    cli_logger_config,
    config_file_option,
    dataset_option,
    group_options,
    no_interaction_option,
    seed_option,
    training_options,
)

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("cli").getChild("train")

# pylint: disable=import-outside-toplevel,too-many-arguments,too-many-locals


@click.command()
@group_options(dataset_option, config_file_option, seed_option, no_interaction_option)
@training_options
@click.option(
    "--checkpoint",
    "-c",
    "checkpoint",
    type=click.Path(dir_okay=False, writable=True),
    required=True,
    help="Checkpoint file written every --checkpoint-every episodes and at the end",
)
@click.option(
    "--metrics",
    "metrics",
    type=click.Path(dir_okay=False, writable=True),
    default=None,
    help="CSV file receiving episode,loss,lr,query_acc rows (validation rows go to <stem>.val.csv)",
)
@click.option(
    "--resume",
    "resume",
    type=click.Path(dir_okay=False),
    default=None,
    help="Checkpoint to resume from.  The run continues with the checkpoint's config",
)
def train_command(dataset, config_file, seed, no_interaction, checkpoint, metrics, resume, **overrides):
    """
    Episodic meta-training on the train split of a dataset
    """
    from nethermind.labelprop.episodes import load_fsds
    from nethermind.labelprop.training import CsvMetricsSink, Trainer, load_checkpoint, resolve_config
    from nethermind.labelprop.training.utils import GracefulKiller

    console = cli_logger_config(root_logger)

    resume_ckpt = load_checkpoint(resume) if resume else None
    if resume_ckpt is not None:
        config = resume_ckpt.config
        if overrides.get("max_episodes") is not None:
            config = config.replace(max_episodes=overrides["max_episodes"])
    else:
        config = resolve_config(config_file, seed=seed, **overrides)

    data = load_fsds(dataset)
    sink = CsvMetricsSink(metrics) if metrics else None
    trainer = Trainer.from_config(
        config, data, sink=sink, checkpoint_path=checkpoint, resume=resume_ckpt, no_interaction=no_interaction
    )
    trainer.print_plan(console)

    killer = GracefulKiller(console)
    try:
        ckpt = trainer.run(console=console, killer=killer)
    finally:
        if sink is not None and not trainer.interrupted:
            sink.close()

    if trainer.interrupted:
        console.print(f"[yellow]Training interrupted after {ckpt.episodes_seen} episodes.  Resume with --resume")
        return

    recent = trainer.history[-50:]
    if recent:
        mean_acc = sum(record.query_acc for record in recent) / len(recent)
        console.print(
            f"[green]Training complete.  Mean query accuracy over the last {len(recent)} episodes: {mean_acc:.4f}"
        )
