import logging

import click

from nethermind.labelprop.cli.utils import (
    baseline_kind_option,
    checkpoint_option,
    cli_logger_config,
    config_file_option,
    config_header,
    dataset_option,
    episodes_option,
    group_options,
    incorrect_labels_option,
    k_shot_option,
    label_init_option,
    load_dataset_split,
    n_way_option,
    no_interaction_option,
    optional_checkpoint_option,
    output_option,
    print_header,
    progress_bar,
    query_option,
    report_header,
    seed_option,
    split_option,
    timing_option,
    workers_option,
)

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("cli").getChild("evaluate")

# pylint: disable=import-outside-toplevel,too-many-arguments,too-many-locals


def _finish(console, reports, output, header, timing, title):
    from nethermind.labelprop.bench import report_table, write_report_csv

    console.print(report_table(reports, title=title))
    if output:
        write_report_csv(reports, output, header=header, timing=timing)


@click.command()
@group_options(
    checkpoint_option,
    dataset_option,
    split_option,
    n_way_option,
    k_shot_option,
    query_option,
    episodes_option,
    seed_option,
    workers_option,
    label_init_option,
    incorrect_labels_option,
    output_option,
    timing_option,
    no_interaction_option,
)
@click.option("--tag", "tag", default="tpn", show_default=True, help="Model tag written to the report")
def eval_command(
    checkpoint,
    dataset,
    split,
    n_way,
    k_shot,
    query,
    episodes,
    seed,
    workers,
    label_init,
    incorrect_labels,
    output,
    timing,
    no_interaction,
    tag,
):
    """
    Evaluate a trained checkpoint over random test episodes
    """
    from nethermind.labelprop.bench import LabelNoise, evaluate
    from nethermind.labelprop.training import load_checkpoint
    from nethermind.labelprop.types import LabelInit

    console = cli_logger_config(root_logger)
    ckpt = load_checkpoint(checkpoint)
    data = load_dataset_split(dataset, split)

    cfg = ckpt.config
    n_way = cfg.n_way if n_way is None else n_way
    k_shot = cfg.k_test if k_shot is None else k_shot
    query = cfg.query if query is None else query
    seed = seed if seed is not None else 0
    header = report_header(
        "eval",
        checkpoint=checkpoint,
        fingerprint=ckpt.fingerprint.hex(),
        dataset=dataset,
        split=split,
        n_way=n_way,
        k_shot=k_shot,
        query=query,
        episodes=episodes,
        seed=seed,
        label_init=label_init,
        incorrect_labels=incorrect_labels,
    )
    header.update(config_header(cfg))
    print_header(console, header)

    with progress_bar(console, "Evaluating", episodes, no_interaction) as advance:
        report = evaluate(
            ckpt,
            data,
            n_way,
            k_shot,
            query,
            episodes,
            seed,
            tag=tag,
            workers=workers,
            noise=LabelNoise(LabelInit(label_init), incorrect_labels),
            advance=advance,
        )
    _finish(console, [report], output, header, timing, "Evaluation")


@click.command()
@group_options(
    baseline_kind_option,
    dataset_option,
    optional_checkpoint_option,
    split_option,
    n_way_option,
    k_shot_option,
    query_option,
    episodes_option,
    seed_option,
    workers_option,
    output_option,
    timing_option,
    no_interaction_option,
)
@click.option("--sigma", "sigma", type=float, default=None, help="Fixed length-scale (default: median)")
@click.option("--k-graph", "k_graph", type=int, default=None, help="Neighbours kept per row")
@click.option("--alpha", "alpha", type=float, default=None, help="Propagation weight")
def eval_baseline_command(
    kind,
    dataset,
    checkpoint,
    split,
    n_way,
    k_shot,
    query,
    episodes,
    seed,
    workers,
    output,
    timing,
    no_interaction,
    sigma,
    k_graph,
    alpha,
):
    """
    Evaluate a non-learned baseline: fixed-sigma label propagation or nearest prototype
    """
    from nethermind.labelprop.bench import eval_baseline
    from nethermind.labelprop.training import TrainConfig, load_checkpoint
    from nethermind.labelprop.types import BaselineKind

    console = cli_logger_config(root_logger)
    ckpt = load_checkpoint(checkpoint) if checkpoint else None
    data = load_dataset_split(dataset, split)

    defaults = ckpt.config if ckpt else TrainConfig()
    n_way = defaults.n_way if n_way is None else n_way
    k_shot = defaults.k_test if k_shot is None else k_shot
    query = defaults.query if query is None else query
    seed = seed if seed is not None else 0
    header = report_header(
        "eval-baseline",
        kind=kind,
        checkpoint=checkpoint or "",
        dataset=dataset,
        split=split,
        n_way=n_way,
        k_shot=k_shot,
        query=query,
        episodes=episodes,
        seed=seed,
        sigma="median" if sigma is None else sigma,
    )
    if ckpt is not None:
        header.update(config_header(ckpt.config))
    print_header(console, header)

    with progress_bar(console, "Evaluating baseline", episodes, no_interaction) as advance:
        report = eval_baseline(
            BaselineKind(kind),
            data,
            n_way,
            k_shot,
            query,
            episodes,
            seed,
            checkpoint=ckpt,
            sigma=sigma,
            k_graph=k_graph,
            alpha=alpha,
            workers=workers,
            advance=advance,
        )
    _finish(console, [report], output, header, timing, "Baseline Evaluation")


@click.command()
@group_options(
    checkpoint_option,
    dataset_option,
    split_option,
    n_way_option,
    k_shot_option,
    query_option,
    episodes_option,
    seed_option,
    workers_option,
    output_option,
    timing_option,
    no_interaction_option,
)
@click.option("--labeled-ratio", "labeled_ratio", type=float, default=0.4, show_default=True, help="Labeled share")
@click.option("--pool-size", "-m", "pool_size", type=int, default=0, show_default=True, help="Unlabeled pool size")
@click.option("--distractors", "distractors", type=int, default=0, show_default=True, help="Distractor classes")
@click.option("--splits", "splits", type=int, default=10, show_default=True, help="Labeled/unlabeled splits")
def semi_eval_command(
    checkpoint,
    dataset,
    split,
    n_way,
    k_shot,
    query,
    episodes,
    seed,
    workers,
    output,
    timing,
    no_interaction,
    labeled_ratio,
    pool_size,
    distractors,
    splits,
):
    """
    Semi-supervised evaluation with an unlabeled pool, one graph per query
    """
    from nethermind.labelprop.bench import semi_eval
    from nethermind.labelprop.training import load_checkpoint

    console = cli_logger_config(root_logger)
    ckpt = load_checkpoint(checkpoint)
    data = load_dataset_split(dataset, split)

    cfg = ckpt.config
    n_way = cfg.n_way if n_way is None else n_way
    k_shot = cfg.k_test if k_shot is None else k_shot
    query = cfg.query if query is None else query
    seed = seed if seed is not None else 0
    header = report_header(
        "semi-eval",
        checkpoint=checkpoint,
        fingerprint=ckpt.fingerprint.hex(),
        dataset=dataset,
        split=split,
        n_way=n_way,
        k_shot=k_shot,
        query=query,
        episodes=episodes,
        seed=seed,
        labeled_ratio=labeled_ratio,
        pool_size=pool_size,
        distractors=distractors,
        splits=splits,
    )
    header.update(config_header(cfg))
    print_header(console, header)

    with progress_bar(console, "Semi-supervised evaluation", episodes * splits, no_interaction) as advance:
        report = semi_eval(
            ckpt,
            data,
            n_way,
            k_shot,
            query,
            labeled_ratio=labeled_ratio,
            pool_size=pool_size,
            distractors=distractors,
            episodes=episodes,
            seed=seed,
            splits=splits,
            workers=workers,
            advance=advance,
        )
    _finish(console, [report], output, header, timing, "Semi-Supervised Evaluation")


@click.command()
@group_options(
    dataset_option,
    config_file_option,
    optional_checkpoint_option,
    episodes_option,
    seed_option,
    workers_option,
    output_option,
    timing_option,
)
@click.option("--param", "param", type=str, required=True, help="Swept parameter")
@click.option("--values", "values", type=str, required=True, help="Comma separated values, ie. 5,10,15")
def sweep_command(dataset, config_file, checkpoint, episodes, seed, workers, output, timing, param, values):
    """
    Sweep one parameter: query, test_shot, alpha, k_graph, train_shot, train_query or matched_query
    """
    from nethermind.labelprop.bench import parse_values, report_table, sweep, write_sweep_csv
    from nethermind.labelprop.episodes import load_fsds
    from nethermind.labelprop.training import load_checkpoint, resolve_config

    console = cli_logger_config(root_logger)
    parsed = parse_values(param, values)
    ckpt = load_checkpoint(checkpoint) if checkpoint else None
    base_config = ckpt.config if ckpt else resolve_config(config_file, seed=seed)
    seed = seed if seed is not None else base_config.seed
    data = load_fsds(dataset)

    header = report_header("sweep", param=param, values=values, dataset=dataset, episodes=episodes, seed=seed)
    header.update(config_header(base_config))
    print_header(console, header)

    rows = sweep(param, parsed, base_config, data, checkpoint=ckpt, episodes=episodes, seed=seed, workers=workers)
    console.print(report_table([report for _, _, report in rows], title=f"Sweep over {param}"))
    if output:
        write_sweep_csv(rows, output, header=header, timing=timing)
