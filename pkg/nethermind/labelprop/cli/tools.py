import logging

import click

from nethermind.labelprop.cli.utils import (
    cli_logger_config,
    config_file_option,
    group_options,
    seed_option,
    synthetic_kind_option,
)

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("cli").getChild("tools")

# Tiny episode used when neither the config file nor a flag sets these fields
GRADCHECK_DEFAULTS = {"n_way": 2, "k_test": 1, "query": 1, "embedding": "mlp", "embed_dim": 8, "hidden_dim": 16}

# pylint: disable=import-outside-toplevel,too-many-arguments


@click.command()
@group_options(config_file_option, seed_option)
@click.option("--n-way", "n_way", type=int, default=None, help="Episode way  [default: 2]")
@click.option("--k-shot", "k_shot", type=int, default=None, help="Support examples per class  [default: 1]")
@click.option("--query", "query", type=int, default=None, help="Query examples per class  [default: 1]")
@click.option("--embed-dim", "embed_dim", type=int, default=None, help="MLP embedding width  [default: 8]")
@click.option("--hidden-dim", "hidden_dim", type=int, default=None, help="MLP hidden width  [default: 16]")
@click.option(
    "--zero-sigma-head",
    is_flag=True,
    default=False,
    help="Zero the final sigma layer first.  Its upstream tensors then report zero gradients",
)
def gradcheck_command(config_file, seed, n_way, k_shot, query, embed_dim, hidden_dim, zero_sigma_head):
    """
    Compare autodiff gradients with central finite differences on a tiny episode
    """
    from nethermind.labelprop.training import gradcheck, resolve_config

    console = cli_logger_config(root_logger)
    config = resolve_config(
        config_file,
        defaults=GRADCHECK_DEFAULTS,
        seed=seed,
        n_way=n_way,
        k_test=k_shot,
        query=query,
        embed_dim=embed_dim,
        hidden_dim=hidden_dim,
    )
    report = gradcheck(config, zero_sigma_head=zero_sigma_head)
    console.print(report.table())

    for group, worst in report.groups().items():
        console.print(f"{group:<12} max relative error {worst:.3e}")
    if report.passed:
        console.print(f"[green]All {len(report.checks)} tensors agree with finite differences")
    else:
        failed = [check.name for check in report.checks if not check.passed]
        console.print(f"[red]{len(failed)} tensors disagree with finite differences: {', '.join(failed)}")


def _fractions(ctx, param, value: str) -> tuple[float, float, float]:  # pylint: disable=unused-argument
    try:
        parts = tuple(float(part) for part in value.split(","))
    except ValueError:
        raise click.BadParameter(f"expected three comma separated numbers, received {value!r}")
    if len(parts) != 3:
        raise click.BadParameter(f"expected three comma separated numbers, received {value!r}")
    return parts  # type: ignore[return-value]


@click.command()
@group_options(synthetic_kind_option, seed_option)
@click.option("--classes", "classes", type=int, default=20, show_default=True, help="Number of classes")
@click.option("--per-class", "per_class", type=int, default=60, show_default=True, help="Examples per class")
@click.option("--dim", "dim", type=int, default=2, show_default=True, help="Example dimension")
@click.option("--noise", "noise", type=float, default=0.1, show_default=True, help="Gaussian noise std")
@click.option(
    "--splits",
    "fractions",
    type=str,
    default="0.6,0.2,0.2",
    show_default=True,
    callback=_fractions,
    help="Train, val and test class fractions",
)
@click.option(
    "--output",
    "-o",
    "output",
    type=click.Path(dir_okay=False, writable=True),
    required=True,
    help="FSDS file to write.  The split manifest is written next to it",
)
def gen_data_command(kind, seed, classes, per_class, dim, noise, fractions, output):
    """
    Generate a synthetic FSDS dataset with a train/val/test split manifest
    """
    from rich.table import Table

    from nethermind.labelprop.episodes import gen_synthetic, save_fsds
    from nethermind.labelprop.types import Split, SyntheticKind

    console = cli_logger_config(root_logger)
    dataset = gen_synthetic(SyntheticKind(kind), classes, per_class, dim, noise, seed or 0, fractions)
    save_fsds(dataset, output)

    table = Table(title=f"{SyntheticKind(kind).value} ({dataset.num_examples} examples)", min_width=40)
    table.add_column("Split")
    table.add_column("Classes", justify="right")
    for split in Split:
        table.add_row(split.value, str(sum(1 for record in dataset.classes if record.split == split)))
    console.print(table)


@click.command()
@click.argument("checkpoint", type=click.Path(dir_okay=False, exists=True))
def inspect_checkpoint_command(checkpoint):
    """
    Print the configuration, counters and stored blobs of a checkpoint
    """
    from rich.table import Table

    from nethermind.labelprop.training import load_checkpoint

    console = cli_logger_config(root_logger)
    ckpt = load_checkpoint(checkpoint)

    summary = Table(title=f"Checkpoint {checkpoint}", min_width=60)
    summary.add_column("Key")
    summary.add_column("Value", justify="right")
    summary.add_row("version", str(ckpt.version))
    summary.add_row("fingerprint", ckpt.fingerprint.hex())
    summary.add_row("input shape", "x".join(str(dim) for dim in ckpt.in_shape))
    summary.add_row("episodes seen", str(ckpt.episodes_seen))
    summary.add_row("adam step", str(ckpt.adam.step))
    summary.add_row("parameters", str(ckpt.parameter_count))
    for name, value in ckpt.rng_counters.items():
        summary.add_row(f"counter.{name}", str(value))
    for key, value in ckpt.config.to_dict().items():
        summary.add_row(f"config.{key}", str(value))
    console.print(summary)

    blobs = Table(title="Stored Blobs", min_width=60)
    blobs.add_column("Name")
    blobs.add_column("Shape", justify="right")
    for name, shape in ckpt.name_table():
        blobs.add_row(name, "x".join(str(dim) for dim in shape) or "scalar")
    console.print(blobs)
