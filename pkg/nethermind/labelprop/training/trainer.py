import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from rich.console import Console
from rich.progress import Progress
from rich.table import Table

from nethermind.labelprop.episodes import Dataset, StreamCounters, sample_episode, stream_rng
from nethermind.labelprop.episodes.sampler import Episode
from nethermind.labelprop.exceptions import ConfigError, NumericalError, SingularMatrixError
from nethermind.labelprop.model import PropagationNetwork
from nethermind.labelprop.propagation import accuracy, build_label_matrix
from nethermind.labelprop.tensor import backward, no_grad
from nethermind.labelprop.types import EpisodeRecord, MetricsSink, RngStream, Split, ValidationRecord

from .adam import AdamState, adam_step
from .checkpoint import Checkpoint, save_checkpoint
from .config import TrainConfig
from .schedule import lr_at
from .utils import GracefulKiller, progress_defaults

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("training").getChild("trainer")


@dataclass
class Trainer:  # pylint: disable=too-many-instance-attributes
    """
    Sequential episodic meta-training.  Episode ``i`` is always sampled from the sampling stream at index ``i``,
    so a run resumed from a checkpoint replays exactly the episodes an uninterrupted run would have seen.
    """

    config: TrainConfig
    train_set: Dataset
    model: PropagationNetwork
    adam: AdamState
    counters: StreamCounters
    in_shape: tuple[int, ...]

    episodes_seen: int = 0
    sink: MetricsSink | None = None
    checkpoint_path: Path | None = None
    val_set: Dataset | None = None
    no_interaction: bool = True
    interrupted: bool = False
    history: list[EpisodeRecord] = field(default_factory=list)

    @classmethod
    def from_config(  # pylint: disable=too-many-arguments
        cls,
        config: TrainConfig,
        dataset: Dataset,
        sink: MetricsSink | None = None,
        checkpoint_path: str | Path | None = None,
        resume: Checkpoint | None = None,
        no_interaction: bool = True,
    ) -> "Trainer":
        """
        Prepares a run over the train split of a dataset.  When resuming, parameters, optimizer state and stream
        counters come from the checkpoint, and config must describe the same model.
        """
        train_set = dataset.for_split(Split.train)
        train_set.check_capacity(config.train_n_way, config.k_train + config.train_query_per_class)
        val_set = dataset.for_split(Split.val) if config.val_every else None
        in_shape = tuple(dataset.example_shape)

        if resume is None:
            model = PropagationNetwork.initialize(
                config.embedding,
                in_shape,
                stream_rng(config.seed, RngStream.init, 0),
                embed_dim=config.embed_dim,
                hidden_dim=config.hidden_dim,
                alpha=config.alpha,
                k_graph=config.k_graph,
                propagation=config.propagation,
                iter_steps=config.iter_steps,
            )
            adam = AdamState.zeros_like(model.parameters())
            counters = StreamCounters(config.seed)
            episodes_seen = 0
        else:
            if resume.in_shape != in_shape:
                raise ConfigError(
                    f"Checkpoint was trained on examples of shape {resume.in_shape}, dataset has {in_shape}"
                )
            if resume.config.replace(max_episodes=config.max_episodes) != config:
                raise ConfigError("Resumed runs must keep the checkpoint config.  Only max_episodes may change")
            model = resume.to_model()
            adam = AdamState(
                m={name: array.copy() for name, array in resume.adam.m.items()},
                v={name: array.copy() for name, array in resume.adam.v.items()},
                step=resume.adam.step,
            )
            counters = StreamCounters(config.seed, resume.rng_counters)
            episodes_seen = resume.episodes_seen
            logger.info(f"Resuming training from episode {episodes_seen}")

        return cls(
            config=config,
            train_set=train_set,
            model=model,
            adam=adam,
            counters=counters,
            in_shape=in_shape,
            episodes_seen=episodes_seen,
            sink=sink,
            checkpoint_path=Path(checkpoint_path) if checkpoint_path else None,
            val_set=val_set,
            no_interaction=no_interaction,
        )

    # -------------------------------------------------------
    #    Episodes
    # -------------------------------------------------------
    def sample(self, index: int) -> Episode:
        """Training episode number ``index``"""
        cfg = self.config
        self.counters.seek(RngStream.sampling, index)
        rng = self.counters.next(RngStream.sampling)
        return sample_episode(self.train_set, cfg.train_n_way, cfg.k_train, cfg.train_query_per_class, rng)

    def train_episode(self) -> EpisodeRecord:
        """Forward, backward and one Adam update on the next episode"""
        cfg = self.config
        index = self.episodes_seen
        episode = self.sample(index)
        labels = build_label_matrix(episode.support_labels, episode.n_way, episode.size, episode.query_labels)

        try:
            passed = self.model.forward(episode.batch(), labels, cfg.loss_scope)
        except SingularMatrixError as exc:
            raise NumericalError(
                f"Singular propagation system in episode {index}: {exc}", self.diagnostics(index, episode)
            )

        loss = passed.loss.item()
        if not np.isfinite(loss):
            raise NumericalError(f"Non-finite loss {loss} in episode {index}", self.diagnostics(index, episode))

        backward(passed.loss)
        lr = lr_at(index, cfg.lr0, cfg.halve_every)
        adam_step(self.model.parameters(), self.adam, lr)
        self.episodes_seen += 1

        record = EpisodeRecord(episode=index, loss=loss, lr=lr, query_acc=accuracy(passed.result, labels))
        if self.sink is not None:
            self.sink.write(record)
        self.history.append(record)
        return record

    def diagnostics(self, index: int, episode: Episode) -> dict:
        """Length-scale range and conditioning of (I - alpha S) for a failing episode"""
        report: dict = {"episode": index, "seed": self.config.seed, "stream": RngStream.sampling.name}
        try:
            with no_grad():
                graph = self.model.graph(episode.batch())
            sigmas = graph.sigmas.data
            report["sigma_min"] = float(np.min(sigmas))
            report["sigma_max"] = float(np.max(sigmas))
            system = np.eye(graph.n) - self.config.alpha * graph.S_norm.data
            report["condition"] = float(np.linalg.cond(system))
        except Exception as exc:  # pylint: disable=broad-exception-caught
            report["error"] = repr(exc)
        logger.error(f"Numerical failure diagnostics: {report}")
        return report

    def validate(self) -> ValidationRecord:
        """Accuracy of the current parameters on the validation split"""
        from nethermind.labelprop.bench.evaluate import evaluate_model  # pylint: disable=import-outside-toplevel

        cfg = self.config
        assert self.val_set is not None, "Validation requires a val split"
        report = evaluate_model(
            self.model.clone(), self.val_set, cfg.n_way, cfg.k_test, cfg.query, cfg.val_episodes, cfg.seed, tag="val"
        )
        record = ValidationRecord(episode=self.episodes_seen, val_acc=report.mean_acc, val_ci95=report.ci95)
        logger.info(f"Validation after {self.episodes_seen} episodes: {report.mean_acc:.4f} +- {report.ci95:.4f}")
        if self.sink is not None:
            self.sink.write_validation(record)
        return record

    # -------------------------------------------------------
    #    Run
    # -------------------------------------------------------
    def checkpoint(self) -> Checkpoint:
        return Checkpoint.from_model(
            self.model, self.config, self.in_shape, self.adam, self.episodes_seen, self.counters.counters
        )

    def save(self) -> Checkpoint:
        ckpt = self.checkpoint()
        if self.checkpoint_path is not None:
            save_checkpoint(ckpt, self.checkpoint_path)
        return ckpt

    def run(self, console: Console | None = None, killer: GracefulKiller | None = None) -> Checkpoint:
        """
        Trains until ``max_episodes`` episodes have been seen.  Checkpoints are written every
        ``checkpoint_every`` episodes and at the end.  When the killer receives a signal, the current episode
        finishes, progress is saved, and the partial checkpoint is returned.
        """
        cfg = self.config
        with Progress(
            *progress_defaults, console=console, disable=self.no_interaction or console is None
        ) as progress:
            task = progress.add_task(
                "Training", total=cfg.max_episodes, completed=self.episodes_seen, status="loss: -"
            )
            while self.episodes_seen < cfg.max_episodes:
                if killer is not None and killer.kill_now:
                    self.interrupted = True
                    killer.finalize(self)
                    return self.checkpoint()

                record = self.train_episode()
                if self.episodes_seen % cfg.checkpoint_every == 0 and self.checkpoint_path is not None:
                    self.save()
                if cfg.val_every and self.episodes_seen % cfg.val_every == 0:
                    self.validate()
                progress.update(task, advance=1, status=f"loss: {record.loss:.4f}  acc: {record.query_acc:.3f}")

        logger.info(f"Training finished after {self.episodes_seen} episodes")
        return self.save()

    def print_plan(self, console: Console) -> None:
        """Prints the resolved configuration as a table"""
        table = Table(title="Training Configuration", min_width=60)
        table.add_column("Key")
        table.add_column("Value", justify="right")
        for key, value in self.config.to_dict().items():
            table.add_row(key, str(value))
        table.add_row("[cyan]parameters", str(self.model.parameter_count))
        table.add_row("[cyan]resume episode", str(self.episodes_seen))
        console.print(table)


def train(
    dataset: Dataset,
    config: TrainConfig,
    sink: MetricsSink | None = None,
    checkpoint_path: str | Path | None = None,
    resume: Checkpoint | None = None,
) -> Checkpoint:
    """Runs episodic training without any console output and returns the final checkpoint"""
    return Trainer.from_config(config, dataset, sink=sink, checkpoint_path=checkpoint_path, resume=resume).run()
